use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DspError {
    #[error("undecodable audio: {0}")]
    Undecodable(String),
    #[error("audio contains no samples")]
    EmptyAudio,
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("no rhythmic content")]
    NoRhythmicContent,
    #[error("no tonal content")]
    NoTonalContent,
    #[error("external decoder failed: {0}")]
    ExternalDecoder(String),
    #[error("plot rendering failed: {0}")]
    Render(String),
}

impl DspError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        DspError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, DspError>;
