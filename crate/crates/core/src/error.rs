//! Error type shared by every analysis stage.

use thiserror::Error;

/// Errors produced by the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-positive price {value} at index {index}")]
    NonPositivePrice { index: usize, value: f64 },

    #[error("series too short: need at least {required} observations, got {actual}")]
    TooShort { required: usize, actual: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("timestamps of '{left}' and '{right}' are not aligned")]
    Misaligned { left: String, right: String },

    #[error("series has zero variance")]
    ZeroVariance,

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("scale grid mismatch between wavelet fields")]
    GridMismatch,

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("scale grid too sparse for reconstruction (dj = {0} > 0.25)")]
    SparseGrid(f64),

    #[error("optimizer did not converge after {iterations} iterations (gradient norm {grad_norm:.3e})")]
    NonConvergence { iterations: usize, grad_norm: f64 },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("csv row {row}: {message}")]
    Csv { row: usize, message: String },

    #[error("malformed sidecar: {0}")]
    Sidecar(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("image encoding failed: {0}")]
    Image(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit status: 1 for bad input or I/O, 2 for numerical
    /// non-convergence, 3 for internal invariant violations.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonConvergence { .. } | Error::NotPositiveDefinite(_) => 2,
            Error::Invariant(_) => 3,
            _ => 1,
        }
    }
}
