use thiserror::Error;

/// Errors raised by the solvers and their supporting linear algebra.
#[derive(Debug, Error)]
pub enum CovselError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not positive definite ({0})")]
    NotPositiveDefinite(String),

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("internal inconsistency: {0}")]
    Internal(String),

    #[error("gap bound violated at iteration {k}: gap {gap:e} > bound {bound:e}")]
    GapBoundViolated { k: usize, gap: f64, bound: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CovselError>;
