use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot:.3e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eig:.3e})")]
    NotPositiveSemidefinite { min_eig: f64 },
    #[error("matrix is not symmetric: |S[{row},{col}] - S[{col},{row}]| = {gap:.3e}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("rectangle is degenerate in coordinate {coord}: lower {lower} > upper {upper}")]
    DegenerateRectangle { coord: usize, lower: f64, upper: f64 },
    #[error("sigma_* must be positive, got {0}")]
    DegenerateSigma(f64),
    #[error("moment order q must be at least 4, got {0}")]
    BadMomentOrder(f64),
    #[error("coordinate {0} has zero variance")]
    ZeroVariance(usize),
    #[error("diagonal entry {index} is {value}, expected >= 1")]
    BadDiagonal { index: usize, value: f64 },
    #[error("analytic path requires a diagonal covariance")]
    NonDiagonalSigma,
    #[error("derivative order {0} exceeds the supported maximum")]
    OrderTooHigh(usize),
    #[error("evaluation budget exceeded: {needed} index tuples > {budget}")]
    BudgetExceeded { needed: usize, budget: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
