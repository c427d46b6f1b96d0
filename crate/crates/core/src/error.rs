//! Error type shared across the library.

use thiserror::Error;

/// Errors produced by operator algebra, series evaluation, and integrators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("particle label {label} out of range 1..={max}")]
    LabelOutOfRange { label: usize, max: usize },

    #[error("duplicate particle label {0}")]
    DuplicateLabel(usize),

    #[error("Hilbert-space dimension {dim} exceeds configured cap {cap}")]
    DimCapExceeded { dim: usize, cap: usize },

    #[error("partition enumeration over {n} elements exceeds cap {cap}")]
    EnumerationCap { n: usize, cap: usize },

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPositive(f64),

    #[error("pair potential is not symmetric under site swap (max deviation {0:.3e})")]
    NotSymmetric(f64),

    #[error("operator is not permutation symmetric (max deviation {0:.3e})")]
    NotPermutationSymmetric(f64),

    #[error("scaling parameter must be nonnegative, got {0}")]
    NegativeEpsilon(f64),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("sequence component for n={0} is missing")]
    MissingComponent(usize),

    #[error("truncation order {given} is insufficient for finite sector (need {needed})")]
    TruncationInsufficient { given: usize, needed: usize },

    #[error("truncation order must be given explicitly for non-terminating sequences")]
    TruncationRequired,

    #[error("evolution operator of order {0} is not supported (only orders 0 and 1 are defined)")]
    UnsupportedOrder(usize),

    #[error("ODE step size fell below {min:.3e} at t={t:.6} (local error {err:.3e} > tol {tol:.3e})")]
    StepRejection { t: f64, min: f64, err: f64, tol: f64 },

    #[error("numerical instability: {0}")]
    Instability(String),

    #[error("eigendecomposition failed: {0}")]
    Linalg(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}
