use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = ImprintError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ImprintError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file: {0}")]
    Format(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("class {class} is empty")]
    EmptyClass { class: usize },

    #[error("class {class} has {available} samples, {requested} requested")]
    NotEnoughSamples {
        class: usize,
        available: usize,
        requested: usize,
    },

    #[error("requested {k} proxies from {n} samples")]
    TooManyProxies { k: usize, n: usize },

    #[error("cannot l2-normalize a zero vector")]
    ZeroVector,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("linear system is singular")]
    Singular,

    #[error("all paired differences are zero")]
    AllZeroDifferences,
}

impl ImprintError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ImprintError::Io {
            path: path.into(),
            source,
        }
    }
}
