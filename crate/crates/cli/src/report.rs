//! JSON artifacts written by the subcommands.

use std::path::Path;

use gcause::invariance::DecisionMatrix;
use gcause::knockoff::SMethod;
use gcause::synth::Score;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const REPORT_SCHEMA: &str = "gcause-report/1";
pub const BENCHMARK_SCHEMA: &str = "gcause-benchmark/1";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything a discovery run decided, with the configuration that produced
/// it. Wall-clock timings live in a separate `timing.json` so that this file
/// is a pure function of the configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub tool_version: String,
    pub config: RunConfig,
    pub data: DataSummary,
    pub training: TrainingSummary,
    pub knockoffs: KnockoffSummary,
    pub decisions: DecisionMatrix,
    /// Present when the data came from the generator with a causal link.
    pub score: Option<Score>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    /// `"csv"` or `"synth"`.
    pub source: String,
    pub length: usize,
    pub names: Vec<String>,
    /// Graph draws rejected as degenerate before the one used.
    pub rejected_graphs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub hidden: usize,
    pub epochs: usize,
    pub final_loss: f64,
    pub best_epoch: Option<usize>,
    pub best_validation_nll: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnockoffSummary {
    pub shrinkage: f64,
    pub method: SMethod,
    pub s: Vec<f64>,
}

/// Milliseconds spent in each phase of a discovery run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub data_ms: u128,
    pub train_ms: u128,
    pub knockoff_ms: u128,
    pub inference_ms: u128,
    pub total_ms: u128,
}

/// The part of a report that scoring needs; other fields are ignored.
#[derive(Debug, Deserialize)]
pub struct ReportDecisions {
    pub schema: String,
    pub decisions: DecisionMatrix,
}

impl ReportDecisions {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
        let report: Self = serde_json::from_str(&text).map_err(|e| CliError::read(path, e))?;
        if report.schema != REPORT_SCHEMA {
            return Err(CliError::read(
                path,
                format!("unknown report schema {:?}", report.schema),
            ));
        }
        Ok(report)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    /// Mean over all runs, rounded to two decimals.
    pub aggregate: Score,
    pub runs: Vec<EvalRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRun {
    pub report: String,
    pub graph: String,
    pub score: Score,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkCell {
    pub density: f64,
    pub seed: u64,
    pub status: CellStatus,
    pub score: Option<Score>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub density: f64,
    pub runs: usize,
    pub correct: f64,
    pub wrong: f64,
    pub no_inference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub schema: String,
    pub tool_version: String,
    pub complete: bool,
    pub rows: Vec<BenchmarkRow>,
    pub cells: Vec<BenchmarkCell>,
}

impl BenchmarkReport {
    /// Text table with one row per density.
    pub fn table(&self) -> String {
        let mut out = String::from("density  runs  correct  wrong  no_inference\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:>7.2}  {:>4}  {:>7.2}  {:>5.2}  {:>12.2}\n",
                r.density, r.runs, r.correct, r.wrong, r.no_inference
            ));
        }
        out
    }
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("serializing output: {e}")))?;
    text.push('\n');
    Ok(text)
}
