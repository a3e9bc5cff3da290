use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("{path}:{line}: {msg}")]
    Format {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("operation requires a generative model; graph has none")]
    Unsupported,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no candidate nodes: {0}")]
    EmptyCandidates(String),

    #[error("rewire conflict: {0}")]
    RewireConflict(String),

    #[error("plan replay failed at step {step}: {msg}")]
    Replay { step: usize, msg: String },

    #[error("non-finite value in {0}")]
    Numeric(String),

    #[error("empty sample: {0}")]
    EmptySample(String),

    #[error("enumeration too large: {0}")]
    Size(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
