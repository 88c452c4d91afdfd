use thiserror::Error;

use crate::exprlang::ExprError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{what} = {value} outside admissible range {range}")]
    OutOfRange { what: &'static str, value: f64, range: String },
    #[error("no root of {0} in the admissible interval")]
    NoRoot(&'static str),
    #[error("grid under-resolves the highest mode: {points} points given, {required} required")]
    UnderResolved { points: usize, required: usize },
    #[error("frequency {0} has no matching mode")]
    UnknownMode(f64),
    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },
    #[error("series truncated after {terms} terms with remainder bound {remainder:e} above {tol:e}")]
    SeriesNotConverged { terms: usize, remainder: f64, tol: f64 },
    #[error("quadrature did not reach tolerance: estimated error {0:e}")]
    Quadrature(f64),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

pub type Result<T> = std::result::Result<T, Error>;
