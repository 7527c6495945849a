//! CSV persistence: one row per episode and one summary row per cell.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::experiment::{EpisodeRecord, ExperimentSpec};
use crate::stats::Summary;
use crate::{HarnessError, Result};

#[derive(Debug, Clone, Serialize)]
pub struct ResultRow<'a> {
    pub domain: &'a str,
    pub planner: &'a str,
    pub n_b: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    /// Empty when unlimited.
    pub n_mem: Option<usize>,
    pub beta0: f64,
    pub c: f64,
    #[serde(rename = "K")]
    pub particles: usize,
    pub seed: u64,
    pub undiscounted_return: f64,
    pub discounted_return: f64,
    pub steps: usize,
    pub max_nodes: usize,
    /// Empty when timing is disabled.
    pub mean_plan_time_ms: Option<f64>,
    pub status: &'static str,
}

impl<'a> ResultRow<'a> {
    pub fn new(spec: &'a ExperimentSpec, c: f64, record: &EpisodeRecord, timing: bool) -> Self {
        Self {
            domain: spec.domain.key(),
            planner: spec.planner.key(),
            n_b: spec.settings.budget,
            horizon: spec.settings.horizon,
            n_mem: spec.settings.memory_cap,
            beta0: spec.settings.beta0,
            c,
            particles: spec.settings.particles,
            seed: record.seed,
            undiscounted_return: record.undiscounted_return,
            discounted_return: record.discounted_return,
            steps: record.steps,
            max_nodes: record.max_nodes,
            mean_plan_time_ms: timing.then_some(record.mean_plan_time_ms),
            status: record.status.key(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow<'a> {
    pub domain: &'a str,
    pub planner: &'a str,
    pub n_b: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub n_mem: Option<usize>,
    pub beta0: f64,
    pub c: f64,
    #[serde(rename = "K")]
    pub particles: usize,
    pub episodes: usize,
    pub mean_return: f64,
    pub se_return: f64,
    pub mean_discounted_return: f64,
    pub se_discounted_return: f64,
    pub mean_steps: f64,
    pub max_nodes: usize,
    pub aborted: usize,
}

impl<'a> SummaryRow<'a> {
    pub fn new(spec: &'a ExperimentSpec, c: f64, records: &[EpisodeRecord]) -> Self {
        let returns: Vec<f64> = records.iter().map(|r| r.undiscounted_return).collect();
        let discounted: Vec<f64> = records.iter().map(|r| r.discounted_return).collect();
        let steps: Vec<f64> = records.iter().map(|r| r.steps as f64).collect();
        let u = Summary::of(&returns);
        let d = Summary::of(&discounted);
        Self {
            domain: spec.domain.key(),
            planner: spec.planner.key(),
            n_b: spec.settings.budget,
            horizon: spec.settings.horizon,
            n_mem: spec.settings.memory_cap,
            beta0: spec.settings.beta0,
            c,
            particles: spec.settings.particles,
            episodes: records.len(),
            mean_return: u.mean,
            se_return: u.std_error,
            mean_discounted_return: d.mean,
            se_discounted_return: d.std_error,
            mean_steps: Summary::of(&steps).mean,
            max_nodes: records.iter().map(|r| r.max_nodes).max().unwrap_or(0),
            aborted: records
                .iter()
                .filter(|r| r.status != crate::EpisodeStatus::Completed)
                .count(),
        }
    }
}

/// CSV writer that flushes after every batch so partial results survive
/// an interruption.
pub struct CsvSink<W: Write> {
    writer: csv::Writer<W>,
}

impl CsvSink<File> {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
        Ok(Self::new(file))
    }
}

impl<W: Write> CsvSink<W> {
    pub fn new(inner: W) -> Self {
        Self {
            writer: csv::Writer::from_writer(inner),
        }
    }

    pub fn write_all<S: Serialize>(&mut self, rows: impl IntoIterator<Item = S>) -> Result<()> {
        for row in rows {
            self.writer.serialize(row)?;
        }
        self.writer.flush().map_err(|e| HarnessError::io("csv output", e))?;
        Ok(())
    }

    pub fn into_inner(self) -> Result<W> {
        self.writer
            .into_inner()
            .map_err(|e| HarnessError::io("csv output", e.into_error()))
    }
}
