//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a precondition (negative variance, length mismatch, ...).
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Input outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Non-finite values where finite ones are required.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Mismatched array shapes in the network or linear algebra helpers.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Training diverged; reports where the run stood when it aborted.
    #[error("training failed at epoch {epoch} (lr={lr:.3e}): {message}")]
    Training {
        epoch: usize,
        lr: f64,
        message: String,
    },

    /// Malformed or corrupted model checkpoint.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
