//! Tool implementations behind the registry.

pub mod native;

use thiserror::Error;

use hearsay_dsp::DspError;

/// Why a dispatched tool produced nothing.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ToolFailure {
    /// Parameters passed the schema but not the tool's own range checks.
    #[error("{0}")]
    InvalidParams(String),
    #[error("{0}")]
    Execution(String),
}

impl From<DspError> for ToolFailure {
    fn from(e: DspError) -> Self {
        match e {
            DspError::InvalidParameter { .. } => ToolFailure::InvalidParams(e.to_string()),
            other => ToolFailure::Execution(other.to_string()),
        }
    }
}
