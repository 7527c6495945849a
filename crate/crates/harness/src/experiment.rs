//! One experiment cell: a domain, a planner, its settings and a number of
//! seeded episodes.

use std::time::{Duration, Instant};

use oloop_core::belief::{default_max_attempts, particle_update};
use oloop_core::domain::{Battleship, DomainKey, PocMan, RockSample, Tiger};
use oloop_core::planner::{self, DEFAULT_BETA0, DEFAULT_PARTICLES};
use oloop_core::{
    ActionId, BeliefParticles, CapPolicy, Error, GenerativeModel, NormalGammaParams, ObservationId, PlannerConfig,
    PlannerKind, UcbConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::{HarnessError, Result};

/// rng streams split from one episode seed.
const ENVIRONMENT_STREAM: u64 = 0;
const PLANNER_STREAM: u64 = 1;
const BELIEF_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerSettings {
    pub budget: usize,
    pub horizon: usize,
    pub memory_cap: Option<usize>,
    pub cap_policy: CapPolicy,
    /// Prior `beta0`; the rest of the prior is `mu0 = 0`, `lambda0 = 0.01`,
    /// `alpha0 = 1`.
    pub beta0: f64,
    /// UCB1 exploration constant; `None` uses the domain's reward range.
    pub c: Option<f64>,
    pub particles: usize,
}

impl Default for PlannerSettings {
    fn default() -> Self {
        Self {
            budget: planner::DEFAULT_BUDGET,
            horizon: planner::DEFAULT_HORIZON,
            memory_cap: None,
            cap_policy: CapPolicy::Freeze,
            beta0: DEFAULT_BETA0,
            c: None,
            particles: DEFAULT_PARTICLES,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub domain: DomainKey,
    pub planner: PlannerKind,
    pub settings: PlannerSettings,
    pub episodes: usize,
    /// `None` uses the per-domain default of [`default_max_steps`].
    pub max_episode_steps: Option<usize>,
    pub base_seed: u64,
    /// No episode of the cell starts after this much wall-clock time.
    pub wall_clock_limit: Option<Duration>,
    pub no_adjacent_ships: bool,
}

impl ExperimentSpec {
    pub fn new(domain: DomainKey, planner: PlannerKind, settings: PlannerSettings) -> Self {
        Self {
            domain,
            planner,
            settings,
            episodes: 1,
            max_episode_steps: None,
            base_seed: 0,
            wall_clock_limit: None,
            no_adjacent_ships: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(HarnessError::Invalid("episode count must be at least 1".into()));
        }
        if self.max_steps() == 0 {
            return Err(HarnessError::Invalid("max episode steps must be at least 1".into()));
        }
        Ok(())
    }

    pub fn max_steps(&self) -> usize {
        self.max_episode_steps
            .unwrap_or_else(|| default_max_steps(self.domain))
    }

    /// Full planner configuration for `model`.
    pub fn planner_config<M: GenerativeModel>(&self, model: &M) -> Result<PlannerConfig> {
        let s = &self.settings;
        let mut config = PlannerConfig::for_model(model);
        config.budget = s.budget;
        config.horizon = s.horizon;
        config.memory_cap = s.memory_cap;
        config.cap_policy = s.cap_policy;
        config.prior = NormalGammaParams::uninformative(s.beta0)?;
        if let Some(c) = s.c {
            config.ucb = UcbConfig::new(c)?;
        }
        config.particle_capacity = s.particles;
        config.validate()?;
        Ok(config)
    }

    /// Exploration constant in effect for `model`.
    pub fn effective_c<M: GenerativeModel>(&self, model: &M) -> f64 {
        self.settings.c.unwrap_or_else(|| model.reward_range())
    }
}

pub fn default_max_steps(domain: DomainKey) -> usize {
    match domain {
        DomainKey::PocMan => 1000,
        _ => 200,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpisodeStatus {
    Completed,
    /// The planner or the simulator failed; the record covers the steps
    /// taken before the failure.
    Aborted,
}

impl EpisodeStatus {
    pub fn key(self) -> &'static str {
        match self {
            EpisodeStatus::Completed => "ok",
            EpisodeStatus::Aborted => "aborted",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub seed: u64,
    pub undiscounted_return: f64,
    pub discounted_return: f64,
    pub steps: usize,
    /// Largest node count of any planning call.
    pub max_nodes: usize,
    pub mean_plan_time_ms: f64,
    /// Belief updates that lost every particle and were rebuilt.
    pub belief_recoveries: usize,
    pub status: EpisodeStatus,
}

/// Seed of episode `index`: a splitmix64 step over `base + index`, so every
/// episode is reproducible on its own.
pub fn episode_seed(base: u64, index: usize) -> u64 {
    let mut z = base.wrapping_add((index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Rebuilds a belief that lost every particle: each new particle is the
/// domain's recovery proposal from a random old particle, and the initial
/// belief is used when the domain proposes nothing.
fn recover_belief<M: GenerativeModel>(
    model: &M,
    previous: &BeliefParticles<M::State>,
    action: ActionId,
    observation: ObservationId,
    rng: &mut ChaCha8Rng,
) -> Result<BeliefParticles<M::State>> {
    let capacity = previous.capacity();
    let mut particles = Vec::with_capacity(capacity);
    for _ in 0..capacity {
        let old = previous.sample(rng)?;
        if let Some(p) = model.recover_particle(old, action, observation, rng) {
            particles.push(p);
        }
    }
    if particles.is_empty() {
        log::warn!("no recovery proposal; belief reset to the initial belief");
        return Ok(BeliefParticles::from_initial(model, capacity, rng)?);
    }
    Ok(BeliefParticles::from_particles(particles, capacity)?)
}

/// Plays one episode: plan from the belief, act on the hidden state,
/// filter the belief with the observation, until a terminal state or
/// `spec.max_steps()` steps.
pub fn run_episode<M: GenerativeModel>(
    model: &M,
    spec: &ExperimentSpec,
    config: &PlannerConfig,
    index: usize,
) -> EpisodeRecord {
    let seed = episode_seed(spec.base_seed, index);
    let mut env_rng = stream(seed, ENVIRONMENT_STREAM);
    let mut plan_rng = stream(seed, PLANNER_STREAM);
    let mut belief_rng = stream(seed, BELIEF_STREAM);
    let mut record = EpisodeRecord {
        episode: index,
        seed,
        undiscounted_return: 0.0,
        discounted_return: 0.0,
        steps: 0,
        max_nodes: 0,
        mean_plan_time_ms: 0.0,
        belief_recoveries: 0,
        status: EpisodeStatus::Completed,
    };
    let mut hidden = model.sample_initial(&mut env_rng);
    let mut belief = match BeliefParticles::from_initial(model, config.particle_capacity, &mut belief_rng) {
        Ok(b) => b,
        Err(e) => {
            log::error!("episode {index}: {e}");
            record.status = EpisodeStatus::Aborted;
            return record;
        }
    };
    let mut weight = 1.0;
    let mut planning = Duration::ZERO;
    let max_attempts = default_max_attempts(config.particle_capacity);
    let outcome: Result<()> = (|| {
        while record.steps < spec.max_steps() && !model.is_terminal(&hidden) {
            let started = Instant::now();
            let result = planner::plan(spec.planner, &belief, model, config, &mut plan_rng)?;
            planning += started.elapsed();
            record.max_nodes = record.max_nodes.max(result.nodes_used);
            let action = result.chosen_action;
            let t = model.step(&mut hidden, action, &mut env_rng)?;
            record.steps += 1;
            record.undiscounted_return += t.reward;
            record.discounted_return += weight * t.reward;
            weight *= model.discount();
            if t.terminal {
                break;
            }
            belief = match particle_update(&belief, action, t.observation, model, &mut belief_rng, max_attempts) {
                Ok(b) => b,
                Err(Error::ParticleDeprivation { .. }) => {
                    record.belief_recoveries += 1;
                    log::debug!("episode {index} step {}: particle deprivation", record.steps);
                    recover_belief(model, &belief, action, t.observation, &mut belief_rng)?
                }
                Err(e) => return Err(e.into()),
            };
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        log::error!("episode {index} aborted after {} steps: {e}", record.steps);
        record.status = EpisodeStatus::Aborted;
    }
    if record.steps > 0 {
        record.mean_plan_time_ms = planning.as_secs_f64() * 1e3 / record.steps as f64;
    }
    record
}

/// Runs every episode of `spec` on `model`, in parallel on `pool`, and
/// returns the records in episode order. Episodes that would start after
/// the wall-clock limit are skipped.
pub fn run_on_model<M>(model: &M, spec: &ExperimentSpec, pool: &rayon::ThreadPool) -> Result<Vec<EpisodeRecord>>
where
    M: GenerativeModel + Sync,
{
    spec.validate()?;
    let config = spec.planner_config(model)?;
    let started = Instant::now();
    let records: Vec<Option<EpisodeRecord>> = pool.install(|| {
        (0..spec.episodes)
            .into_par_iter()
            .map(|i| {
                if spec.wall_clock_limit.is_some_and(|limit| started.elapsed() >= limit) {
                    return None;
                }
                Some(run_episode(model, spec, &config, i))
            })
            .collect()
    });
    let skipped = records.iter().filter(|r| r.is_none()).count();
    if skipped > 0 {
        log::warn!(
            "{} / {}: wall-clock limit reached, {skipped} episodes skipped",
            spec.domain,
            spec.planner
        );
    }
    Ok(records.into_iter().flatten().collect())
}

/// Generic callback over the concrete model type of a [`DomainKey`].
pub trait DomainVisitor {
    type Output;

    fn visit<M>(self, model: &M) -> Self::Output
    where
        M: GenerativeModel + Sync;
}

pub fn with_domain<V: DomainVisitor>(key: DomainKey, no_adjacent_ships: bool, visitor: V) -> V::Output {
    match key {
        DomainKey::RockSample11 => visitor.visit(&RockSample::eleven_eleven()),
        DomainKey::RockSample15 => visitor.visit(&RockSample::fifteen_fifteen()),
        DomainKey::Battleship => visitor.visit(&Battleship::new(no_adjacent_ships)),
        DomainKey::PocMan => visitor.visit(&PocMan::default()),
        DomainKey::Tiger => visitor.visit(&Tiger::default()),
    }
}

/// Records of a finished experiment together with the exploration
/// constant it used.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub records: Vec<EpisodeRecord>,
    pub c: f64,
}

struct RunVisitor<'a> {
    spec: &'a ExperimentSpec,
    pool: &'a rayon::ThreadPool,
}

impl DomainVisitor for RunVisitor<'_> {
    type Output = Result<ExperimentResult>;

    fn visit<M>(self, model: &M) -> Self::Output
    where
        M: GenerativeModel + Sync,
    {
        Ok(ExperimentResult {
            records: run_on_model(model, self.spec, self.pool)?,
            c: self.spec.effective_c(model),
        })
    }
}

/// Runs `spec` on its registered domain.
pub fn run_experiment(spec: &ExperimentSpec, pool: &rayon::ThreadPool) -> Result<ExperimentResult> {
    with_domain(spec.domain, spec.no_adjacent_ships, RunVisitor { spec, pool })
}

/// Worker pool sized by `OLOOP_WORKERS`, defaulting to the available
/// parallelism.
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let workers = match std::env::var("OLOOP_WORKERS") {
        Ok(v) => v
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| HarnessError::Invalid(format!("OLOOP_WORKERS must be a positive integer, got {v:?}")))?,
        Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Invalid(format!("cannot start {workers} workers: {e}")))
}
