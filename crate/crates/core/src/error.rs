//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its admissible range.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Vector or matrix dimensions do not line up.
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    /// An operation that needs observations got none.
    #[error("empty panel: {0}")]
    EmptyPanel(&'static str),

    /// Not enough observations (or pre-sample history) for the request.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A matrix that must be symmetric positive definite is not.
    #[error("matrix is not positive definite: {0}; consider shrinking it first")]
    NotPositiveDefinite(&'static str),

    /// Mean-variance constraints are collinear (mu proportional to 1).
    #[error("degenerate constraints: {0}")]
    DegenerateConstraints(String),

    /// A variance that must be positive came out non-positive.
    #[error(
        "non-positive variance estimate ({value}); use a larger learning sample or enable clamping"
    )]
    NonPositiveVariance { value: f64 },

    /// Numeric failure that is not a user input error.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    /// Malformed input file contents (beyond syntax errors).
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
