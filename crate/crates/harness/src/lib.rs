//! Experiment harness for the `oloop-core` planners: episode loop, sweep
//! orchestration, summary statistics and CSV output.

mod error;
pub mod experiment;
pub mod output;
pub mod stats;
pub mod sweep;

pub use error::HarnessError;
pub use experiment::{run_episode, run_experiment, EpisodeRecord, EpisodeStatus, ExperimentSpec, PlannerSettings};
pub use sweep::{run_sweep, SweepConfig};

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
