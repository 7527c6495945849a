//! Anytime online planning for large POMDPs.
//!
//! The crate is `no_std` (it needs `alloc`) and contains everything that is
//! pure computation:
//!
//! - [`bandit`]: arm statistics, Normal-Gamma Thompson Sampling and UCB1
//!   with legal-arm masking.
//! - [`model`]: the black-box generative model contract, histories and
//!   discounted returns.
//! - [`belief`]: rejection particle filter and an exact Bayes filter for
//!   small enumerable models.
//! - [`planner`]: POSTS (a fixed stack of Thompson Sampling bandits), POOLTS
//!   and POOLUCT (open-loop trees) and POMCP (a closed-loop history tree),
//!   all with a simulation budget, a horizon and an optional node cap.
//! - [`domain`]: RockSample, Battleship, PocMan and Tiger.
//!
//! IO, experiment orchestration and the command line live in the `oloop`
//! crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bandit;
pub mod belief;
pub mod domain;
mod error;
pub mod model;
pub mod planner;

pub use bandit::{ArmStatistics, NormalGammaParams, UcbConfig};
pub use belief::{BeliefParticles, ExactBelief};
pub use error::Error;
pub use model::{ActionId, GenerativeModel, History, ObservationId, Transition};
pub use planner::{CapPolicy, PlanResult, PlannerConfig, PlannerKind};

pub type Result<T, E = Error> = core::result::Result<T, E>;
