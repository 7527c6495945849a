use crate::model::{ActionId, ObservationId};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("non-finite numeric input: {0}")]
    NonFinite(f64),

    #[error("negative variance {0}")]
    NegativeVariance(f64),

    #[error("invalid Normal-Gamma parameters (mu={mu}, lambda={lambda}, alpha={alpha}, beta={beta})")]
    InvalidPrior {
        mu: f64,
        lambda: f64,
        alpha: f64,
        beta: f64,
    },

    #[error("invalid exploration constant {0}")]
    InvalidExploration(f64),

    /// No arm was legal. Models guarantee a non-empty legal set for
    /// non-terminal states, so this signals a domain bug.
    #[error("no legal arm to select from")]
    EmptyLegalSet,

    #[error("arm {arm} out of range for {arms} arms")]
    ArmOutOfRange { arm: ActionId, arms: usize },

    #[error("action {0} is not legal in the current state")]
    IllegalAction(ActionId),

    #[error("belief contains no particles")]
    EmptyBelief,

    #[error("particle deprivation: observation {observation} not reproduced in {attempts} simulations")]
    ParticleDeprivation {
        observation: ObservationId,
        attempts: usize,
    },

    #[error("observation {0} has zero probability under the current belief")]
    ImpossibleObservation(ObservationId),

    #[error("invalid planner configuration: {0}")]
    InvalidConfig(&'static str),
}
