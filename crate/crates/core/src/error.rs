//! Error type shared across the crate.

use thiserror::Error;

/// Errors raised by construction, numerical routines, and experiment drivers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Incompatible matrix/vector shapes.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Invalid argument value (out-of-range rank, bad probability, ...).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Numerical failure (non-finite value, iteration that failed to converge).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A dense-feasibility guard was exceeded.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Requested rank exceeds the numerical rank of the input.
    #[error("rank deficiency: {0}")]
    RankDeficient(String),

    /// Dataset file parsing failure; carries the offending 1-based line number.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// File I/O failure.
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
