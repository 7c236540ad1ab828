use thiserror::Error;

/// Errors raised by tensor algebra, spectral routines and the checkers built on them.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("incompatible operands: shape {left:?} vs {right:?}")]
    ShapeMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("dimension mismatch: expected {expected}x{expected}, found {rows}x{cols}")]
    DimensionMismatch {
        expected: usize,
        rows: usize,
        cols: usize,
    },

    #[error("non-finite entry at linear index {index}")]
    NonFinite { index: usize },

    #[error("singular tensor: smallest singular value {sigma_min:e} (largest {sigma_max:e})")]
    Singular { sigma_min: f64, sigma_max: f64 },

    #[error("tensor is not Hermitian: relative deviation {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("tensor is not positive definite: smallest eigenvalue {lambda_min:e} (largest {lambda_max:e})")]
    NotPositiveDefinite { lambda_min: f64, lambda_max: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal mass {off_diagonal:e})")]
    NoConvergence { sweeps: usize, off_diagonal: f64 },

    #[error("{what} is undefined at eigenvalue {eigenvalue:e}")]
    Domain { what: String, eigenvalue: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
