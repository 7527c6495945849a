//! Anytime planners over a [`GenerativeModel`].
//!
//! Every planner runs `budget` simulations from states drawn from the root
//! belief, searches at most `horizon` steps deep and never allocates more
//! than `memory_cap` nodes. What happens at the cap is set by
//! [`CapPolicy`]: by default no new node is created but simulation
//! continues through the existing structure, so the budget is spent in
//! full.
//!
//! The final action is the legal root action with the highest mean return.
//! "Legal" means legal in a majority of root particles; visited actions are
//! preferred over unvisited ones.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
use rand::Rng;

use crate::bandit::{ArmStatistics, NormalGammaParams, UcbConfig};
use crate::belief::BeliefParticles;
use crate::model::{ActionId, GenerativeModel};
use crate::{Error, Result};

mod open_loop;
mod pomcp;
mod posts;

pub use open_loop::{poolts_plan, pooluct_plan, OpenLoopTree};
pub use pomcp::{pomcp_plan, HistoryTree};
pub use posts::{posts_plan, BanditStack};

pub const DEFAULT_BUDGET: usize = 4096;
pub const DEFAULT_HORIZON: usize = 100;
pub const DEFAULT_BETA0: f64 = 4000.0;
pub const DEFAULT_PARTICLES: usize = 10_000;

/// Behaviour of a tree planner whose node count has reached the memory cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CapPolicy {
    /// Keep simulating through the existing nodes for the rest of the budget.
    #[default]
    Freeze,
    /// End the search at the first simulation that needs a node beyond the
    /// cap; that simulation is discarded. POSTS allocates its bandits up
    /// front and is never interrupted.
    Interrupt,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerConfig {
    /// Number of simulations per planning call.
    pub budget: usize,
    /// Maximum search depth.
    pub horizon: usize,
    /// Maximum number of nodes (bandits for POSTS); `None` is unlimited.
    pub memory_cap: Option<usize>,
    pub cap_policy: CapPolicy,
    pub discount: f64,
    /// Prior of the Thompson Sampling planners.
    pub prior: NormalGammaParams,
    /// Exploration constant of the UCB1 planners.
    pub ucb: UcbConfig,
    /// Particle count of the belief the planner is fed.
    pub particle_capacity: usize,
}

impl PlannerConfig {
    /// Defaults for `model`: the uninformative prior with `beta0 = 4000`,
    /// `c` equal to the model's reward range and the model's discount.
    pub fn for_model<M: GenerativeModel>(model: &M) -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            horizon: DEFAULT_HORIZON,
            memory_cap: None,
            cap_policy: CapPolicy::Freeze,
            discount: model.discount(),
            prior: NormalGammaParams::uninformative(DEFAULT_BETA0)
                .unwrap_or_else(|_| unreachable!("default prior is valid")),
            ucb: UcbConfig::new(model.reward_range())
                .or_else(|_| UcbConfig::new(1.0))
                .unwrap_or_else(|_| unreachable!("1 is a valid constant")),
            particle_capacity: DEFAULT_PARTICLES,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::InvalidConfig("budget must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be at least 1"));
        }
        if self.memory_cap == Some(0) {
            return Err(Error::InvalidConfig("memory cap must be positive"));
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return Err(Error::InvalidConfig("discount must lie in [0, 1]"));
        }
        if self.particle_capacity == 0 {
            return Err(Error::InvalidConfig("particle capacity must be positive"));
        }
        Ok(())
    }

    pub(crate) fn node_limit(&self) -> usize {
        self.memory_cap.unwrap_or(usize::MAX)
    }

    pub(crate) fn interrupts(&self) -> bool {
        self.cap_policy == CapPolicy::Interrupt
    }
}

/// Mean return and visit count of one root action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionValue {
    pub action: ActionId,
    pub mean: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub chosen_action: ActionId,
    pub nodes_used: usize,
    pub simulations_run: usize,
    /// Visited root actions in ascending id order.
    pub root_action_values: Vec<ActionValue>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlannerKind {
    Posts,
    Poolts,
    Pooluct,
    Pomcp,
    /// Uniformly random legal action; the reference baseline.
    Random,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 5] = [
        PlannerKind::Posts,
        PlannerKind::Poolts,
        PlannerKind::Pooluct,
        PlannerKind::Pomcp,
        PlannerKind::Random,
    ];

    pub fn key(self) -> &'static str {
        match self {
            PlannerKind::Posts => "posts",
            PlannerKind::Poolts => "poolts",
            PlannerKind::Pooluct => "pooluct",
            PlannerKind::Pomcp => "pomcp",
            PlannerKind::Random => "random",
        }
    }

    pub fn uses_thompson(self) -> bool {
        matches!(self, PlannerKind::Posts | PlannerKind::Poolts)
    }

    pub fn uses_ucb(self) -> bool {
        matches!(self, PlannerKind::Pooluct | PlannerKind::Pomcp)
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownPlanner;

impl fmt::Display for UnknownPlanner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("unknown planner (expected posts, poolts, pooluct, pomcp or random)")
    }
}

impl core::error::Error for UnknownPlanner {}

impl FromStr for PlannerKind {
    type Err = UnknownPlanner;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        PlannerKind::ALL
            .into_iter()
            .find(|k| k.key() == s)
            .ok_or(UnknownPlanner)
    }
}

/// Runs the planner selected by `kind`.
pub fn plan<M, R>(
    kind: PlannerKind,
    belief: &BeliefParticles<M::State>,
    model: &M,
    config: &PlannerConfig,
    rng: &mut R,
) -> Result<PlanResult>
where
    M: GenerativeModel,
    R: Rng + ?Sized,
{
    match kind {
        PlannerKind::Posts => posts_plan(belief, model, config, rng),
        PlannerKind::Poolts => poolts_plan(belief, model, config, rng),
        PlannerKind::Pooluct => pooluct_plan(belief, model, config, rng),
        PlannerKind::Pomcp => pomcp_plan(belief, model, config, rng),
        PlannerKind::Random => random_plan(belief, model, rng),
    }
}

/// Uniformly random choice among the root-legal actions.
pub fn random_plan<M, R>(
    belief: &BeliefParticles<M::State>,
    model: &M,
    rng: &mut R,
) -> Result<PlanResult>
where
    M: GenerativeModel,
    R: Rng + ?Sized,
{
    let allowed = root_legal_actions(belief, model)?;
    Ok(PlanResult {
        chosen_action: allowed[rng.random_range(0..allowed.len())],
        nodes_used: 0,
        simulations_run: 0,
        root_action_values: Vec::new(),
    })
}

/// Actions legal in a strict majority of the particles, or, when no action
/// reaches a majority, in at least one particle. Ascending ids.
pub fn root_legal_actions<M: GenerativeModel>(
    belief: &BeliefParticles<M::State>,
    model: &M,
) -> Result<Vec<ActionId>> {
    if belief.is_empty() {
        return Err(Error::EmptyBelief);
    }
    let mut counts = alloc::vec![0usize; model.action_count()];
    let mut legal = Vec::new();
    for particle in belief.particles() {
        model.legal_actions(particle, &mut legal);
        for &a in &legal {
            counts[a] += 1;
        }
    }
    let n = belief.len();
    let majority: Vec<ActionId> = (0..counts.len()).filter(|&a| 2 * counts[a] > n).collect();
    if !majority.is_empty() {
        return Ok(majority);
    }
    let any: Vec<ActionId> = (0..counts.len()).filter(|&a| counts[a] > 0).collect();
    if any.is_empty() {
        return Err(Error::EmptyLegalSet);
    }
    Ok(any)
}

/// Highest-mean visited action of `allowed`; lowest id among exact ties and
/// the first allowed action when none was visited.
pub(crate) fn best_root_action(stats: &[ArmStatistics], allowed: &[ActionId]) -> ActionId {
    let mut best: Option<(ActionId, f64)> = None;
    for &a in allowed {
        let s = &stats[a];
        if !s.is_visited() {
            continue;
        }
        match best {
            Some((_, m)) if m >= s.mean() => {}
            _ => best = Some((a, s.mean())),
        }
    }
    best.map(|(a, _)| a).unwrap_or(allowed[0])
}

pub(crate) fn action_values(stats: &[ArmStatistics]) -> Vec<ActionValue> {
    stats
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_visited())
        .map(|(action, s)| ActionValue {
            action,
            mean: s.mean(),
            count: s.count(),
        })
        .collect()
}

pub(crate) fn check_inputs<S>(belief: &BeliefParticles<S>, config: &PlannerConfig) -> Result<()> {
    config.validate()?;
    if belief.is_empty() {
        return Err(Error::EmptyBelief);
    }
    Ok(())
}

/// Discounted return of a uniformly random legal-action rollout of at most
/// `depth` steps from `state`. Terminal states and zero depth yield 0.
pub fn rollout<M, R>(
    model: &M,
    state: &M::State,
    depth: usize,
    discount: f64,
    rng: &mut R,
) -> Result<f64>
where
    M: GenerativeModel,
    R: Rng + ?Sized,
{
    let mut state = state.clone();
    let mut legal = Vec::new();
    rollout_in_place(model, &mut state, depth, discount, rng, &mut legal)
}

pub(crate) fn rollout_in_place<M, R>(
    model: &M,
    state: &mut M::State,
    depth: usize,
    discount: f64,
    rng: &mut R,
    legal: &mut Vec<ActionId>,
) -> Result<f64>
where
    M: GenerativeModel,
    R: Rng + ?Sized,
{
    if depth == 0 || model.is_terminal(state) {
        return Ok(0.0);
    }
    let mut total = 0.0;
    let mut weight = 1.0;
    for _ in 0..depth {
        model.legal_actions(state, legal);
        if legal.is_empty() {
            return Err(Error::EmptyLegalSet);
        }
        let action = legal[rng.random_range(0..legal.len())];
        let t = model.step(state, action, rng)?;
        total += weight * t.reward;
        weight *= discount;
        if t.terminal {
            break;
        }
    }
    Ok(total)
}
