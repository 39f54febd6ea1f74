use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RemoteError {
    #[error("timeout")]
    Timeout,
    #[error("connection failure: {0}")]
    Connection(String),
    #[error("non-success status {code}: {body}")]
    Status { code: u16, body: String },
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("endpoint misconfigured: {0}")]
    Config(String),
}
