//! Sweep grids read from TOML.
//!
//! ```toml
//! domains = ["rocksample-11-11", "battleship"]
//! planners = ["posts", "poolts", "pooluct", "pomcp"]
//! budgets = [64, 256, 1024, 4096]
//! horizons = [100]
//! memory_caps = ["unlimited", 100, 1000]   # optional, default unlimited
//! beta0 = [1000.0, 4000.0, 32000.0]        # optional, default [4000.0]
//! c = 20.0                                 # optional, default reward range
//! particles = 10000                        # optional
//! episodes = 30
//! seed = 1
//! max_episode_steps = 200                  # optional, per-domain default
//! wall_clock_limit_secs = 3600             # optional, per cell
//! no_adjacent_ships = false                # optional
//! interrupt_at_cap = false                 # optional, end searches at the cap
//! record_timing = false                    # optional, fills mean_plan_time_ms
//! ```
//!
//! Cells are ordered domain, planner, budget, horizon, memory cap, beta0;
//! the beta0 axis is collapsed to its first value for planners that do not
//! use the prior.

use std::path::Path;
use std::time::Duration;

use oloop_core::domain::DomainKey;
use oloop_core::planner::{DEFAULT_BETA0, DEFAULT_PARTICLES};
use oloop_core::{CapPolicy, PlannerKind};
use serde::Deserialize;

use crate::experiment::{run_experiment, ExperimentResult, ExperimentSpec, PlannerSettings};
use crate::output::{CsvSink, ResultRow, SummaryRow};
use crate::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum MemoryCap {
    Nodes(usize),
    Keyword(Unlimited),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unlimited {
    Unlimited,
}

impl MemoryCap {
    fn limit(self) -> Option<usize> {
        match self {
            MemoryCap::Nodes(n) => Some(n),
            MemoryCap::Keyword(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub domains: Vec<String>,
    pub planners: Vec<String>,
    pub budgets: Vec<usize>,
    pub horizons: Vec<usize>,
    #[serde(default = "unlimited")]
    pub memory_caps: Vec<MemoryCap>,
    #[serde(default = "default_beta0")]
    pub beta0: Vec<f64>,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default = "default_particles")]
    pub particles: usize,
    pub episodes: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub max_episode_steps: Option<usize>,
    #[serde(default)]
    pub wall_clock_limit_secs: Option<u64>,
    #[serde(default)]
    pub no_adjacent_ships: bool,
    #[serde(default)]
    pub interrupt_at_cap: bool,
    /// Timed rows are not reproducible byte for byte.
    #[serde(default)]
    pub record_timing: bool,
}

pub fn cap_policy(interrupt: bool) -> CapPolicy {
    if interrupt {
        CapPolicy::Interrupt
    } else {
        CapPolicy::Freeze
    }
}

fn unlimited() -> Vec<MemoryCap> {
    vec![MemoryCap::Keyword(Unlimited::Unlimited)]
}

fn default_beta0() -> Vec<f64> {
    vec![DEFAULT_BETA0]
}

fn default_particles() -> usize {
    DEFAULT_PARTICLES
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Expands the grid into cells in output order.
    pub fn cells(&self) -> Result<Vec<ExperimentSpec>> {
        let domains = self
            .domains
            .iter()
            .map(|d| d.parse::<DomainKey>().map_err(|e| HarnessError::Invalid(format!("{d:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let planners = self
            .planners
            .iter()
            .map(|p| p.parse::<PlannerKind>().map_err(|e| HarnessError::Invalid(format!("{p:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let axes = [
            ("domains", domains.len()),
            ("planners", planners.len()),
            ("budgets", self.budgets.len()),
            ("horizons", self.horizons.len()),
            ("memory_caps", self.memory_caps.len()),
            ("beta0", self.beta0.len()),
        ];
        if let Some((name, _)) = axes.iter().find(|(_, n)| *n == 0) {
            return Err(HarnessError::Invalid(format!("{name} must not be empty")));
        }
        let mut cells = Vec::new();
        for &domain in &domains {
            for &planner in &planners {
                let betas = if planner.uses_thompson() {
                    &self.beta0[..]
                } else {
                    &self.beta0[..1]
                };
                for &budget in &self.budgets {
                    for &horizon in &self.horizons {
                        for &cap in &self.memory_caps {
                            for &beta0 in betas {
                                let settings = PlannerSettings {
                                    budget,
                                    horizon,
                                    memory_cap: cap.limit(),
                                    cap_policy: cap_policy(self.interrupt_at_cap),
                                    beta0,
                                    c: self.c,
                                    particles: self.particles,
                                };
                                let mut spec = ExperimentSpec::new(domain, planner, settings);
                                spec.episodes = self.episodes;
                                spec.base_seed = self.seed;
                                spec.max_episode_steps = self.max_episode_steps;
                                spec.wall_clock_limit = self.wall_clock_limit_secs.map(Duration::from_secs);
                                spec.no_adjacent_ships = self.no_adjacent_ships;
                                spec.validate()?;
                                cells.push(spec);
                            }
                        }
                    }
                }
            }
        }
        Ok(cells)
    }
}

/// Runs every cell of `config` and writes `results.csv` (one row per
/// episode) and `summary.csv` (one row per cell) into `out_dir`. Rows are
/// flushed after each cell.
pub fn run_sweep(config: &SweepConfig, out_dir: &Path, pool: &rayon::ThreadPool) -> Result<Vec<(ExperimentSpec, ExperimentResult)>> {
    let cells = config.cells()?;
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let mut results = CsvSink::create(&out_dir.join("results.csv"))?;
    let mut summary = CsvSink::create(&out_dir.join("summary.csv"))?;
    let mut done = Vec::with_capacity(cells.len());
    for (i, spec) in cells.into_iter().enumerate() {
        log::info!(
            "cell {}: {} {} n_b={} T={} n_mem={:?} beta0={}",
            i + 1,
            spec.domain,
            spec.planner,
            spec.settings.budget,
            spec.settings.horizon,
            spec.settings.memory_cap,
            spec.settings.beta0
        );
        let result = run_experiment(&spec, pool)?;
        results.write_all(
            result
                .records
                .iter()
                .map(|r| ResultRow::new(&spec, result.c, r, config.record_timing)),
        )?;
        summary.write_all([SummaryRow::new(&spec, result.c, &result.records)])?;
        done.push((spec, result));
    }
    Ok(done)
}
