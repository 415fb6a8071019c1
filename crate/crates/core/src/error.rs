use thiserror::Error;

/// Errors produced by the model, the schedulers and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: bad tree, unknown vertex, invalid parameter.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A schedule violates validity (unserved request, service before
    /// arrival, double service).
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    /// A guard refused the operation (e.g. too many requests for the
    /// exhaustive optimum).
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Bad experiment configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
