use thiserror::Error;

/// Errors raised by body evaluation, body parsing and residual evaluation.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("origin is not strictly interior (f = {value:e})")]
    NotInterior { value: f64 },

    #[error("ray does not meet the surface before the bracket cap")]
    NoIntersection,

    #[error("parse error at `{path}`: {message}")]
    Parse { path: String, message: String },

    #[error("blended body lost its interior point at t = {t}")]
    DegenerateFamily { t: f64 },

    #[error("chord residual requires {0}")]
    UnsupportedForm(&'static str),

    #[error("unsupported dimension {got}: only d = {supported} is available")]
    UnsupportedDimension { supported: usize, got: usize },

    #[error("grid of {points} points exceeds the budget of {limit}")]
    GridBudget { points: u128, limit: u128 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
