use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("operator is not Hermitian (max |H - H^dagger| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("gate is not unitary (max |U^dagger U - 1| = {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("gate is singular: smallest singular value {smallest:e} below {threshold:e}")]
    Singular { smallest: f64, threshold: f64 },

    #[error("determinant {det:e} too small for local invariants")]
    DeterminantTooSmall { det: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("time grid mismatch between control fields")]
    GridMismatch,

    #[error("invalid logical indices: {0}")]
    InvalidIndices(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("functional {kind} is not usable here: {reason}")]
    FunctionalMismatch { kind: String, reason: String },

    #[error("monotonicity violated at iteration {iteration}: J rose by {increase:e}")]
    Monotonicity { iteration: usize, increase: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
