//! Benchmark harness around the hearsay orchestrator: dataset loading,
//! batch runs, scoring, tool-call stratification, behavioral statistics,
//! rubric aggregation and audit bundles.

pub mod audit;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod rounding;
pub mod rubric;
pub mod scoring;
pub mod stats;
pub mod stratify;
pub mod traces;

pub use rounding::Rational;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] config::HarnessConfigError),
    #[error(transparent)]
    Dataset(#[from] dataset::DatasetError),
    #[error(transparent)]
    Traces(#[from] traces::TraceLoadError),
    #[error(transparent)]
    Rubric(#[from] rubric::RubricError),
    #[error("{0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl HarnessError {
    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 1,
        }
    }
}
