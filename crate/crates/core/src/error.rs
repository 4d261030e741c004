//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("operator not Hermitian: defect {defect:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("singular dressing: zero drive detuning with nonzero drive amplitude")]
    SingularDressing,

    #[error("configuration invalid:\n{}", .0.join("\n"))]
    ConfigValidation(Vec<String>),

    #[error("configuration parse error: {0}")]
    ConfigParse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
