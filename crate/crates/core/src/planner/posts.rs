use alloc::vec::Vec;
use rand::Rng;

use super::{action_values, best_root_action, check_inputs, rollout_in_place, root_legal_actions};
use super::{PlanResult, PlannerConfig};
use crate::bandit::{ArmSelector, ArmStatistics, ThompsonSampling};
use crate::belief::BeliefParticles;
use crate::model::{ActionId, GenerativeModel};
use crate::Result;

/// A fixed stack of Thompson Sampling bandits, one per plan depth.
///
/// Bandit `d` learns which action to play at depth `d` from the discounted
/// return that followed it, regardless of what was observed on the way.
/// With a memory cap below the horizon only `cap` bandits exist and the
/// remaining depth is covered by the random rollout policy.
#[derive(Debug, Clone)]
pub struct BanditStack {
    actions: usize,
    arms: Vec<ArmStatistics>,
}

impl BanditStack {
    pub fn new(depth: usize, actions: usize) -> Self {
        Self {
            actions,
            arms: alloc::vec![ArmStatistics::EMPTY; depth * actions],
        }
    }

    /// Number of bandits.
    pub fn len(&self) -> usize {
        self.arms.len() / self.actions.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn bandit(&self, depth: usize) -> &[ArmStatistics] {
        &self.arms[depth * self.actions..(depth + 1) * self.actions]
    }

    /// Runs `config.budget` simulations from particles of `belief`.
    pub fn search<M, R>(
        &mut self,
        belief: &BeliefParticles<M::State>,
        model: &M,
        config: &PlannerConfig,
        rng: &mut R,
    ) -> Result<usize>
    where
        M: GenerativeModel,
        R: Rng + ?Sized,
    {
        let selector = ThompsonSampling {
            prior: config.prior,
        };
        let bandits = self.len();
        let discount = config.discount;
        let mut legal: Vec<ActionId> = Vec::with_capacity(self.actions);
        let mut path: Vec<(ActionId, f64)> = Vec::with_capacity(bandits);
        for _ in 0..config.budget {
            let mut state = belief.sample(rng)?.clone();
            path.clear();
            let mut terminal = model.is_terminal(&state);
            while path.len() < bandits && !terminal {
                model.legal_actions(&state, &mut legal);
                let action = selector.select(self.bandit(path.len()), &legal, rng)?;
                let t = model.step(&mut state, action, rng)?;
                path.push((action, t.reward));
                terminal = t.terminal;
            }
            let mut ret = if terminal {
                0.0
            } else {
                let remaining = config.horizon - path.len();
                rollout_in_place(model, &mut state, remaining, discount, rng, &mut legal)?
            };
            for (depth, &(action, reward)) in path.iter().enumerate().rev() {
                ret = reward + discount * ret;
                self.arms[depth * self.actions + action].update(ret)?;
            }
        }
        Ok(config.budget)
    }
}

/// Partially observable stacked Thompson Sampling.
pub fn posts_plan<M, R>(
    belief: &BeliefParticles<M::State>,
    model: &M,
    config: &PlannerConfig,
    rng: &mut R,
) -> Result<PlanResult>
where
    M: GenerativeModel,
    R: Rng + ?Sized,
{
    check_inputs(belief, config)?;
    let bandits = config.horizon.min(config.node_limit());
    let mut stack = BanditStack::new(bandits, model.action_count());
    let simulations_run = stack.search(belief, model, config, rng)?;
    let allowed = root_legal_actions(belief, model)?;
    let root = stack.bandit(0);
    Ok(PlanResult {
        chosen_action: best_root_action(root, &allowed),
        nodes_used: stack.len(),
        simulations_run,
        root_action_values: action_values(root),
    })
}
