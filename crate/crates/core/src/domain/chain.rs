//! Small deterministic models whose optimal plans can be enumerated.

use alloc::vec::Vec;
use rand::Rng;

use crate::model::{ActionId, GenerativeModel, ObservationSpace, Transition};
use crate::{Error, Result};

/// Which actions are legal at a node of a [`DeterministicTree`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Legality {
    All,
    /// Only this action, everywhere.
    Only(ActionId),
    /// Action `a` is illegal at the node with index `i` when
    /// `(i + a) % 3 == 2`; never empties the set for two or more actions.
    Staggered,
}

/// A full `actions`-ary tree of depth `depth` with a fixed reward on every
/// edge. Every state emits observation 0, so open- and closed-loop plans
/// coincide.
#[derive(Debug, Clone, PartialEq)]
pub struct DeterministicTree {
    actions: usize,
    depth: usize,
    rewards: Vec<f64>,
    legality: Legality,
    discount: f64,
}

/// Depth and index of a node; the root is `(0, 0)` and child `a` of
/// `(d, i)` is `(d + 1, i * actions + a)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TreeNode {
    pub depth: usize,
    pub index: usize,
}

impl DeterministicTree {
    /// `rewards` lists edge rewards level by level, edge `(i, a)` of level
    /// `d` at offset `sum_{k<d} actions^(k+1) + i * actions + a`.
    pub fn with_rewards(actions: usize, depth: usize, rewards: &[f64]) -> Result<Self> {
        if actions == 0 || depth == 0 {
            return Err(Error::InvalidConfig("tree needs actions and depth"));
        }
        let edges: usize = (1..=depth).map(|d| actions.pow(d as u32)).sum();
        if rewards.len() != edges {
            return Err(Error::InvalidConfig("one reward per edge required"));
        }
        Ok(Self {
            actions,
            depth,
            rewards: rewards.to_vec(),
            legality: Legality::All,
            discount: 1.0,
        })
    }

    /// Integer edge rewards drawn uniformly from `[0, 10]`.
    pub fn random<R: Rng + ?Sized>(actions: usize, depth: usize, rng: &mut R) -> Result<Self> {
        let edges: usize = (1..=depth).map(|d| actions.pow(d as u32)).sum();
        let rewards: Vec<f64> = (0..edges).map(|_| rng.random_range(0..=10) as f64).collect();
        Self::with_rewards(actions, depth, &rewards)
    }

    /// Zero rewards everywhere except `prize` on the last edge of `plan`.
    pub fn lock(actions: usize, plan: &[ActionId], prize: f64) -> Result<Self> {
        let depth = plan.len();
        let edges: usize = (1..=depth).map(|d| actions.pow(d as u32)).sum();
        let mut tree = Self::with_rewards(actions, depth, &alloc::vec![0.0; edges])?;
        let mut node = TreeNode { depth: 0, index: 0 };
        for (d, &a) in plan.iter().enumerate() {
            if a >= actions {
                return Err(Error::IllegalAction(a));
            }
            if d + 1 == depth {
                let edge = tree.edge(node, a);
                tree.rewards[edge] = prize;
            }
            node = TreeNode {
                depth: d + 1,
                index: node.index * actions + a,
            };
        }
        Ok(tree)
    }

    pub fn with_legality(mut self, legality: Legality) -> Self {
        self.legality = legality;
        self
    }

    pub fn with_discount(mut self, discount: f64) -> Self {
        self.discount = discount;
        self
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn is_legal(&self, node: TreeNode, action: ActionId) -> bool {
        action < self.actions
            && match self.legality {
                Legality::All => true,
                Legality::Only(only) => action == only,
                Legality::Staggered => (node.index + action) % 3 != 2,
            }
    }

    /// Reward of taking `action` at `node`.
    pub fn reward(&self, node: TreeNode, action: ActionId) -> f64 {
        self.rewards[self.edge(node, action)]
    }

    fn edge(&self, node: TreeNode, action: ActionId) -> usize {
        let offset: usize = (1..=node.depth).map(|d| self.actions.pow(d as u32)).sum();
        offset + node.index * self.actions + action
    }
}

impl GenerativeModel for DeterministicTree {
    type State = TreeNode;

    fn action_count(&self) -> usize {
        self.actions
    }

    fn observation_space(&self) -> ObservationSpace {
        ObservationSpace::Finite(1)
    }

    fn discount(&self) -> f64 {
        self.discount
    }

    fn reward_range(&self) -> f64 {
        let lo = self.rewards.iter().copied().fold(0.0, f64::min);
        let hi = self.rewards.iter().copied().fold(0.0, f64::max);
        hi - lo
    }

    fn sample_initial<R: Rng + ?Sized>(&self, _rng: &mut R) -> TreeNode {
        TreeNode { depth: 0, index: 0 }
    }

    fn is_terminal(&self, state: &TreeNode) -> bool {
        state.depth >= self.depth
    }

    fn legal_actions(&self, state: &TreeNode, out: &mut Vec<ActionId>) {
        out.clear();
        if self.is_terminal(state) {
            return;
        }
        out.extend((0..self.actions).filter(|&a| self.is_legal(*state, a)));
    }

    fn step<R: Rng + ?Sized>(
        &self,
        state: &mut TreeNode,
        action: ActionId,
        _rng: &mut R,
    ) -> Result<Transition> {
        if self.is_terminal(state) || !self.is_legal(*state, action) {
            return Err(Error::IllegalAction(action));
        }
        let reward = self.reward(*state, action);
        *state = TreeNode {
            depth: state.depth + 1,
            index: state.index * self.actions + action,
        };
        Ok(Transition {
            observation: 0,
            reward,
            terminal: state.depth >= self.depth,
        })
    }
}

/// A counter that pays 1 per step and terminates at `length`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ones {
    pub length: u32,
}

impl GenerativeModel for Ones {
    type State = u32;

    fn action_count(&self) -> usize {
        1
    }

    fn observation_space(&self) -> ObservationSpace {
        ObservationSpace::Finite(1)
    }

    fn discount(&self) -> f64 {
        1.0
    }

    fn reward_range(&self) -> f64 {
        1.0
    }

    fn sample_initial<R: Rng + ?Sized>(&self, _rng: &mut R) -> u32 {
        0
    }

    fn is_terminal(&self, state: &u32) -> bool {
        *state >= self.length
    }

    fn legal_actions(&self, state: &u32, out: &mut Vec<ActionId>) {
        out.clear();
        if !self.is_terminal(state) {
            out.push(0);
        }
    }

    fn step<R: Rng + ?Sized>(&self, state: &mut u32, action: ActionId, _rng: &mut R) -> Result<Transition> {
        if action != 0 || self.is_terminal(state) {
            return Err(Error::IllegalAction(action));
        }
        *state += 1;
        Ok(Transition {
            observation: 0,
            reward: 1.0,
            terminal: *state >= self.length,
        })
    }
}
