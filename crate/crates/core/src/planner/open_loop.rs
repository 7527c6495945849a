use alloc::vec::Vec;
use rand::Rng;

use super::{action_values, best_root_action, check_inputs, rollout_in_place, root_legal_actions};
use super::{PlanResult, PlannerConfig};
use crate::bandit::{ArmSelector, ArmStatistics, ThompsonSampling, Ucb1};
use crate::belief::BeliefParticles;
use crate::model::{ActionId, GenerativeModel};
use crate::Result;

const NO_CHILD: u32 = u32::MAX;

/// Open-loop search tree: node `n` summarizes every history reached by one
/// action prefix, and holds a bandit over all actions of the model.
///
/// Nodes live in flat arrays; node 0 is the root.
#[derive(Debug, Clone)]
pub struct OpenLoopTree {
    actions: usize,
    arms: Vec<ArmStatistics>,
    children: Vec<u32>,
}

impl OpenLoopTree {
    pub fn new(actions: usize) -> Self {
        Self {
            actions,
            arms: alloc::vec![ArmStatistics::EMPTY; actions],
            children: alloc::vec![NO_CHILD; actions],
        }
    }

    pub fn node_count(&self) -> usize {
        self.arms.len() / self.actions
    }

    pub fn node(&self, node: usize) -> &[ArmStatistics] {
        &self.arms[node * self.actions..(node + 1) * self.actions]
    }

    pub fn child(&self, node: usize, action: ActionId) -> Option<usize> {
        match self.children[node * self.actions + action] {
            NO_CHILD => None,
            c => Some(c as usize),
        }
    }

    fn add_child(&mut self, parent: usize, action: ActionId) -> usize {
        let id = self.node_count();
        self.arms
            .extend(core::iter::repeat_n(ArmStatistics::EMPTY, self.actions));
        self.children.extend(core::iter::repeat_n(NO_CHILD, self.actions));
        self.children[parent * self.actions + action] = id as u32;
        id
    }

    /// Runs `config.budget` simulations and returns how many completed.
    /// Each simulation descends with `selector`, adds at most one node where
    /// it leaves the tree (while the node count is below the cap), finishes
    /// with a random rollout and backs the discounted return up every
    /// traversed node.
    pub fn search<M, R, S>(
        &mut self,
        belief: &BeliefParticles<M::State>,
        model: &M,
        config: &PlannerConfig,
        selector: &S,
        rng: &mut R,
    ) -> Result<usize>
    where
        M: GenerativeModel,
        R: Rng + ?Sized,
        S: ArmSelector,
    {
        let limit = config.node_limit();
        let discount = config.discount;
        let mut legal: Vec<ActionId> = Vec::with_capacity(self.actions);
        let mut path: Vec<(usize, ActionId, f64)> = Vec::new();
        let interrupts = config.interrupts();
        for done in 0..config.budget {
            let mut state = belief.sample(rng)?.clone();
            path.clear();
            let mut node = 0;
            let mut terminal = model.is_terminal(&state);
            let mut leaf_value = 0.0;
            while path.len() < config.horizon && !terminal {
                model.legal_actions(&state, &mut legal);
                let action = selector.select(self.node(node), &legal, rng)?;
                let t = model.step(&mut state, action, rng)?;
                path.push((node, action, t.reward));
                terminal = t.terminal;
                match self.child(node, action) {
                    Some(child) => node = child,
                    None => {
                        // a child at the horizon could never be entered
                        if path.len() < config.horizon {
                            if self.node_count() < limit {
                                self.add_child(node, action);
                            } else if interrupts {
                                return Ok(done);
                            }
                        }
                        if !terminal {
                            let remaining = config.horizon - path.len();
                            leaf_value = rollout_in_place(
                                model, &mut state, remaining, discount, rng, &mut legal,
                            )?;
                        }
                        break;
                    }
                }
            }
            let mut ret = leaf_value;
            for &(node, action, reward) in path.iter().rev() {
                ret = reward + discount * ret;
                self.arms[node * self.actions + action].update(ret)?;
            }
        }
        Ok(config.budget)
    }
}

fn open_loop_plan<M, R, S>(
    belief: &BeliefParticles<M::State>,
    model: &M,
    config: &PlannerConfig,
    selector: &S,
    rng: &mut R,
) -> Result<PlanResult>
where
    M: GenerativeModel,
    R: Rng + ?Sized,
    S: ArmSelector,
{
    check_inputs(belief, config)?;
    let mut tree = OpenLoopTree::new(model.action_count());
    let simulations_run = tree.search(belief, model, config, selector, rng)?;
    let allowed = root_legal_actions(belief, model)?;
    let root = tree.node(0);
    Ok(PlanResult {
        chosen_action: best_root_action(root, &allowed),
        nodes_used: tree.node_count(),
        simulations_run,
        root_action_values: action_values(root),
    })
}

/// Open-loop tree search with Thompson Sampling at every node.
pub fn poolts_plan<M, R>(
    belief: &BeliefParticles<M::State>,
    model: &M,
    config: &PlannerConfig,
    rng: &mut R,
) -> Result<PlanResult>
where
    M: GenerativeModel,
    R: Rng + ?Sized,
{
    let selector = ThompsonSampling {
        prior: config.prior,
    };
    open_loop_plan(belief, model, config, &selector, rng)
}

/// Open-loop tree search with UCB1 at every node.
pub fn pooluct_plan<M, R>(
    belief: &BeliefParticles<M::State>,
    model: &M,
    config: &PlannerConfig,
    rng: &mut R,
) -> Result<PlanResult>
where
    M: GenerativeModel,
    R: Rng + ?Sized,
{
    let selector = Ucb1 { config: config.ucb };
    open_loop_plan(belief, model, config, &selector, rng)
}
