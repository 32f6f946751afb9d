use thiserror::Error;

use crate::words::Word;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("leg signature mismatch: expected '{expected}', found '{found}'")]
    SignatureMismatch { expected: Word, found: Word },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("representation is not normalizable: {0}")]
    NotNormalizable(String),

    #[error("inconsistent representation: {0}")]
    InconsistentRepresentation(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("closure did not converge after {rounds} rounds")]
    ClosureDidNotConverge { rounds: usize },

    #[error("central decomposition of cell {cell} is ambiguous: smallest eigenvalue gap {gap:.3e}")]
    ClusteringAmbiguity { cell: String, gap: f64 },

    #[error("value {value} is not within {tol:e} of an integer ({context})")]
    Rounding { value: f64, tol: f64, context: String },

    #[error("missing moment for word '{0}'")]
    MissingMoment(Word),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Rounds `value` to the nearest integer, failing when the distance exceeds `tol`.
pub(crate) fn round_checked(value: f64, tol: f64, context: impl FnOnce() -> String) -> Result<i64> {
    let rounded = value.round();
    if (value - rounded).abs() > tol || !rounded.is_finite() {
        return Err(Error::Rounding { value, tol, context: context() });
    }
    Ok(rounded as i64)
}
