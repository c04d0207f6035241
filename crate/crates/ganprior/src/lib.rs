//! Experiment harness for generative-prior compressive sensing: configuration,
//! weight and signal files, measurement sweeps, CSV and summary reports.

pub mod analysis;
pub mod config;
pub mod io;
pub mod report;
pub mod sweep;

use std::path::PathBuf;

use ganprior_core::gpw1::FormatError;
use ganprior_core::{GeneratorError, MetricsError, OperatorError, SolverError, TheoryError};
use thiserror::Error;

pub use config::{Algorithm, ExperimentConfig, GeneratorSource, GroundTruthMode, SyntheticSpec};
pub use report::{emit_csv, emit_summary, parse_csv};
pub use sweep::{run_sweep, run_trial, SweepContext, TrialInstance, TrialRecord};

/// Environment variable capping the number of parallel trials.
pub const THREADS_ENV: &str = "GANPRIOR_THREADS";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Format { path: PathBuf, source: FormatError },
    #[error("{path}: line {line}: {msg}")]
    Signal { path: PathBuf, line: usize, msg: String },
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    /// Process exit code: 2 for solver divergence, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Solver(SolverError::Diverged { .. }) => 2,
            _ => 1,
        }
    }
}
