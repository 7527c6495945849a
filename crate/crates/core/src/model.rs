//! The black-box simulator contract every planner works against.

use alloc::vec::Vec;
use rand::Rng;

use crate::Result;

pub type ActionId = usize;
pub type ObservationId = usize;

/// Outcome of one simulator step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub observation: ObservationId,
    pub reward: f64,
    pub terminal: bool,
}

/// Size of a model's observation space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservationSpace {
    Finite(usize),
    /// Too large to enumerate; ids are still canonical integers.
    Implicit,
}

/// A generative POMDP model: samples `(s', o, r)` given `(s, a)` without
/// exposing transition or observation probabilities.
///
/// `step` is deterministic given the state, the action and the rng state.
/// Implementations hold no interior mutability, so a model may be shared
/// across threads as long as each thread brings its own rng and states.
pub trait GenerativeModel {
    type State: Clone;

    fn action_count(&self) -> usize;

    fn observation_space(&self) -> ObservationSpace;

    /// Discount factor in `[0, 1]`.
    fn discount(&self) -> f64;

    /// Spread between the lowest and highest reward the domain pays. The
    /// UCB planners default their exploration constant to it.
    fn reward_range(&self) -> f64;

    /// Draws a state from the initial belief.
    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State;

    fn is_terminal(&self, state: &Self::State) -> bool;

    /// Writes the legal actions of `state` into `out`, replacing its
    /// contents. Non-terminal states always have at least one.
    fn legal_actions(&self, state: &Self::State, out: &mut Vec<ActionId>);

    /// Advances `state` in place. Illegal actions are rejected with
    /// [`crate::Error::IllegalAction`] and leave the state untouched.
    fn step<R: Rng + ?Sized>(
        &self,
        state: &mut Self::State,
        action: ActionId,
        rng: &mut R,
    ) -> Result<Transition>;

    /// Proposes a particle for a belief that lost every particle after
    /// `action` was followed by `observation`. `previous` is a particle of
    /// the belief before the update; the proposal should keep the facts
    /// the domain makes certain (fully observed components) and redraw the
    /// rest from the initial belief. `None` means the domain has no
    /// recovery rule and the caller falls back to the initial belief.
    fn recover_particle<R: Rng + ?Sized>(
        &self,
        previous: &Self::State,
        action: ActionId,
        observation: ObservationId,
        rng: &mut R,
    ) -> Option<Self::State> {
        let _ = (previous, action, observation, rng);
        None
    }
}

/// Action-observation history `[a0, o1, a1, o2, ...]` of an episode.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct History {
    entries: Vec<(ActionId, ObservationId)>,
}

impl History {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, action: ActionId, observation: ObservationId) {
        self.entries.push((action, observation));
    }

    pub fn entries(&self) -> &[(ActionId, ObservationId)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn last(&self) -> Option<(ActionId, ObservationId)> {
        self.entries.last().copied()
    }
}

/// `sum_k discount^k * rewards[k]`.
pub fn discounted_return(rewards: &[f64], discount: f64) -> f64 {
    let mut weight = 1.0;
    let mut total = 0.0;
    for &r in rewards {
        total += weight * r;
        weight *= discount;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn returns() {
        assert_eq!(discounted_return(&[1.0, 1.0, 1.0], 0.5), 1.75);
        assert_eq!(discounted_return(&[-3.5], 0.3), -3.5);
        assert_eq!(discounted_return(&[], 0.9), 0.0);
        assert!((discounted_return(&[10.0, -10.0, 10.0], 0.95) - 9.525).abs() < 1e-12);
        assert_eq!(discounted_return(&[2.0, 3.0, 4.0], 1.0), 9.0);
        assert_eq!(discounted_return(&[2.0, 3.0, 4.0], 0.0), 2.0);
    }

    #[test]
    fn history_is_append_only() {
        let mut h = History::new();
        assert!(h.is_empty());
        h.push(1, 0);
        h.push(2, 1);
        assert_eq!(h.entries(), &[(1, 0), (2, 1)]);
        assert_eq!(h.last(), Some((2, 1)));
        assert_eq!(h.len(), 2);
    }
}
