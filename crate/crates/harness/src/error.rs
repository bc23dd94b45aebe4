//! Harness error type with process exit-code mapping.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Unusable input file; carries the 1-based line where parsing gave up.
    #[error("ingestion error in {path} (line {line}): {message}")]
    Ingestion {
        path: String,
        line: usize,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] bidd_core::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// CLI exit code: 2 for ingestion problems, 3 for training failures,
    /// 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Ingestion { .. } => 2,
            Error::Core(bidd_core::Error::Training { .. }) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
