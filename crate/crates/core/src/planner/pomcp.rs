use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use rand::Rng;

use super::{action_values, best_root_action, check_inputs, rollout_in_place, root_legal_actions};
use super::{PlanResult, PlannerConfig};
use crate::bandit::{ucb1_select, ArmStatistics};
use crate::belief::BeliefParticles;
use crate::model::{ActionId, GenerativeModel, ObservationId};
use crate::Result;

const NO_NODE: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct ObservationNode {
    /// `N(h)` and `V(h)`.
    value: ArmStatistics,
    /// Index of the first of `actions` slots in `HistoryTree::action_slots`.
    slots: usize,
}

#[derive(Debug, Clone)]
struct ActionNode {
    /// `N(h, a)` and `Q(h, a)`.
    value: ArmStatistics,
    children: BTreeMap<ObservationId, u32>,
}

/// Closed-loop search tree over histories with alternating o-nodes (one per
/// history) and a-nodes (one per history and action). Both kinds count
/// towards the node total; the root o-node exists from the start.
#[derive(Debug, Clone)]
pub struct HistoryTree {
    actions: usize,
    observation_nodes: Vec<ObservationNode>,
    action_nodes: Vec<ActionNode>,
    action_slots: Vec<u32>,
}

/// What a simulation's leaf added to the tree.
enum Leaf {
    None,
    ObservationNode(usize),
}

impl HistoryTree {
    pub fn new(actions: usize) -> Self {
        let mut tree = Self {
            actions,
            observation_nodes: Vec::new(),
            action_nodes: Vec::new(),
            action_slots: Vec::new(),
        };
        tree.add_observation_node();
        tree
    }

    pub fn node_count(&self) -> usize {
        self.observation_nodes.len() + self.action_nodes.len()
    }

    pub fn observation_node_count(&self) -> usize {
        self.observation_nodes.len()
    }

    pub fn action_node_count(&self) -> usize {
        self.action_nodes.len()
    }

    /// `Q(root, a)` statistics for every action; unexpanded actions are empty.
    pub fn root_values(&self) -> Vec<ArmStatistics> {
        self.action_values(0)
    }

    /// Value statistics of every o-node and a-node, in allocation order.
    pub fn node_values(&self) -> impl Iterator<Item = &ArmStatistics> {
        self.observation_nodes
            .iter()
            .map(|n| &n.value)
            .chain(self.action_nodes.iter().map(|n| &n.value))
    }

    fn add_observation_node(&mut self) -> usize {
        let id = self.observation_nodes.len();
        self.observation_nodes.push(ObservationNode {
            value: ArmStatistics::EMPTY,
            slots: self.action_slots.len(),
        });
        self.action_slots
            .extend(core::iter::repeat_n(NO_NODE, self.actions));
        id
    }

    fn add_action_node(&mut self, parent: usize, action: ActionId) -> usize {
        let id = self.action_nodes.len();
        self.action_nodes.push(ActionNode {
            value: ArmStatistics::EMPTY,
            children: BTreeMap::new(),
        });
        let slot = self.observation_nodes[parent].slots + action;
        self.action_slots[slot] = id as u32;
        id
    }

    fn action_node(&self, parent: usize, action: ActionId) -> Option<usize> {
        match self.action_slots[self.observation_nodes[parent].slots + action] {
            NO_NODE => None,
            id => Some(id as usize),
        }
    }

    fn action_values(&self, node: usize) -> Vec<ArmStatistics> {
        let mut out = Vec::with_capacity(self.actions);
        self.fill_action_values(node, &mut out);
        out
    }

    fn fill_action_values(&self, node: usize, out: &mut Vec<ArmStatistics>) {
        out.clear();
        out.extend((0..self.actions).map(|a| {
            self.action_node(node, a)
                .map(|id| self.action_nodes[id].value)
                .unwrap_or(ArmStatistics::EMPTY)
        }));
    }

    /// Runs `config.budget` UCT simulations and returns how many completed.
    /// A simulation creates at most one node: the a-node of an untried
    /// action or the o-node of an unseen observation, after which it
    /// finishes with a random rollout. Once a frozen cap is reached
    /// selection is restricted to expanded actions, and an o-node without
    /// any is evaluated by rollout alone.
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
        let limit = config.node_limit();
        let discount = config.discount;
        let mut legal: Vec<ActionId> = Vec::with_capacity(self.actions);
        let mut stats: Vec<ArmStatistics> = Vec::with_capacity(self.actions);
        // (o-node, a-node, reward) per simulated step
        let mut path: Vec<(usize, usize, f64)> = Vec::new();
        let interrupts = config.interrupts();
        for done in 0..config.budget {
            let mut state = belief.sample(rng)?.clone();
            path.clear();
            let mut node = 0;
            let mut leaf = Leaf::None;
            let mut leaf_value = 0.0;
            let mut terminal = model.is_terminal(&state);
            while path.len() < config.horizon && !terminal {
                let can_grow = self.node_count() < limit;
                model.legal_actions(&state, &mut legal);
                if !can_grow && !interrupts {
                    legal.retain(|&a| self.action_node(node, a).is_some());
                    if legal.is_empty() {
                        let remaining = config.horizon - path.len();
                        leaf_value =
                            rollout_in_place(model, &mut state, remaining, discount, rng, &mut legal)?;
                        break;
                    }
                }
                self.fill_action_values(node, &mut stats);
                let visits = self.observation_nodes[node].value.count();
                let action = ucb1_select(&stats, &legal, &config.ucb, visits, rng)?;
                let (action_node, expanded) = match self.action_node(node, action) {
                    Some(id) => (id, false),
                    None if can_grow => (self.add_action_node(node, action), true),
                    None => return Ok(done),
                };
                let t = model.step(&mut state, action, rng)?;
                path.push((node, action_node, t.reward));
                terminal = t.terminal;
                if terminal {
                    break;
                }
                let remaining = config.horizon - path.len();
                if expanded {
                    leaf_value =
                        rollout_in_place(model, &mut state, remaining, discount, rng, &mut legal)?;
                    break;
                }
                match self.action_nodes[action_node].children.get(&t.observation) {
                    Some(&child) => node = child as usize,
                    None => {
                        if remaining > 0 {
                            if self.node_count() < limit {
                                let child = self.add_observation_node();
                                self.action_nodes[action_node]
                                    .children
                                    .insert(t.observation, child as u32);
                                leaf = Leaf::ObservationNode(child);
                            } else if interrupts {
                                return Ok(done);
                            }
                        }
                        leaf_value =
                            rollout_in_place(model, &mut state, remaining, discount, rng, &mut legal)?;
                        break;
                    }
                }
            }
            if let Leaf::ObservationNode(child) = leaf {
                self.observation_nodes[child].value.update(leaf_value)?;
            } else if path.is_empty() {
                // rollout straight from the root under a full cap
                self.observation_nodes[0].value.update(leaf_value)?;
            }
            let mut ret = leaf_value;
            for &(node, action_node, reward) in path.iter().rev() {
                ret = reward + discount * ret;
                self.action_nodes[action_node].value.update(ret)?;
                self.observation_nodes[node].value.update(ret)?;
            }
        }
        Ok(config.budget)
    }
}

/// Partially observable Monte-Carlo planning with UCB1 over a history tree.
pub fn pomcp_plan<M, R>(
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
    let mut tree = HistoryTree::new(model.action_count());
    let simulations_run = tree.search(belief, model, config, rng)?;
    let allowed = root_legal_actions(belief, model)?;
    let root = tree.root_values();
    Ok(PlanResult {
        chosen_action: best_root_action(&root, &allowed),
        nodes_used: tree.node_count(),
        simulations_run,
        root_action_values: action_values(&root),
    })
}
