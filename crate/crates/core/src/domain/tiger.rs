//! The two-door Tiger problem, small enough for exact Bayes filtering.

use alloc::vec::Vec;
use rand::Rng;

use crate::belief::EnumerableModel;
use crate::model::{ActionId, GenerativeModel, ObservationId, ObservationSpace, Transition};
use crate::{Error, Result};

pub const LISTEN: ActionId = 0;
pub const OPEN_LEFT: ActionId = 1;
pub const OPEN_RIGHT: ActionId = 2;

pub const HEAR_LEFT: ObservationId = 0;
pub const HEAR_RIGHT: ObservationId = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    /// Index in the enumerable state space: left 0, right 1.
    pub fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TigerState {
    pub tiger: Side,
    /// Set once a door has been opened.
    pub done: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tiger {
    pub listen_accuracy: f64,
    pub discount: f64,
}

impl Default for Tiger {
    fn default() -> Self {
        Self {
            listen_accuracy: 0.85,
            discount: 0.95,
        }
    }
}

impl GenerativeModel for Tiger {
    type State = TigerState;

    fn action_count(&self) -> usize {
        3
    }

    fn observation_space(&self) -> ObservationSpace {
        ObservationSpace::Finite(2)
    }

    fn discount(&self) -> f64 {
        self.discount
    }

    fn reward_range(&self) -> f64 {
        110.0
    }

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> TigerState {
        let tiger = if rng.random::<bool>() { Side::Left } else { Side::Right };
        TigerState { tiger, done: false }
    }

    fn is_terminal(&self, state: &TigerState) -> bool {
        state.done
    }

    fn legal_actions(&self, state: &TigerState, out: &mut Vec<ActionId>) {
        out.clear();
        if !state.done {
            out.extend([LISTEN, OPEN_LEFT, OPEN_RIGHT]);
        }
    }

    fn step<R: Rng + ?Sized>(
        &self,
        state: &mut TigerState,
        action: ActionId,
        rng: &mut R,
    ) -> Result<Transition> {
        if state.done || action > OPEN_RIGHT {
            return Err(Error::IllegalAction(action));
        }
        if action == LISTEN {
            let correct = rng.random::<f64>() < self.listen_accuracy;
            let heard_left = (state.tiger == Side::Left) == correct;
            return Ok(Transition {
                observation: if heard_left { HEAR_LEFT } else { HEAR_RIGHT },
                reward: -1.0,
                terminal: false,
            });
        }
        let opened = if action == OPEN_LEFT { Side::Left } else { Side::Right };
        state.done = true;
        Ok(Transition {
            observation: HEAR_LEFT,
            reward: if opened == state.tiger { -100.0 } else { 10.0 },
            terminal: true,
        })
    }
}

/// States are tiger positions; opening a door leaves the position unchanged
/// and emits [`HEAR_LEFT`].
impl EnumerableModel for Tiger {
    fn state_count(&self) -> usize {
        2
    }

    fn transition_probability(&self, from: usize, _action: ActionId, to: usize) -> f64 {
        if from == to {
            1.0
        } else {
            0.0
        }
    }

    fn observation_probability(&self, to: usize, action: ActionId, observation: ObservationId) -> f64 {
        if action != LISTEN {
            return if observation == HEAR_LEFT { 1.0 } else { 0.0 };
        }
        match (to == Side::Left.index(), observation) {
            (true, HEAR_LEFT) | (false, HEAR_RIGHT) => self.listen_accuracy,
            (_, HEAR_LEFT) | (_, HEAR_RIGHT) => 1.0 - self.listen_accuracy,
            _ => 0.0,
        }
    }
}
