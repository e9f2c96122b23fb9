//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input text (edge lists, event files, serialized models).
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A precondition on arguments or configuration was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Requested parameters have no solution (e.g. block probabilities
    /// outside [0, 1]).
    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    /// An internal invariant failed; indicates a bug.
    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
