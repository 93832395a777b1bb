//! Benchmark experiments: head-to-head comparisons of the two planners over
//! scenario variants, hyperparameter sweeps on one fixed query, and
//! persistence of every run.

mod comparison;
mod persist;
mod spec;
mod sweep;

use std::path::PathBuf;

pub use comparison::{
    prepare, run_comparison, Cell, CellSummary, ComparisonResult, ComparisonSummary, Prepared, RunRecord, TraceRow,
};
pub use persist::{persist_comparison, persist_sweep, read_records, PersistedFiles, SUMMARY_COLUMNS};
pub use spec::{Baseline, Design, ExperimentSpec, ScenarioSource, SweepSpec};
pub use sweep::{sweep_hyperparams, SweepRow, SweepTable};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Scenario(#[from] emob_core::scenario::ScenarioError),
    #[error(transparent)]
    Route(#[from] emob_core::RouteError),
    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }
}

/// Population mean and standard deviation; `None` for an empty sample.
pub fn mean_std(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}
