use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index} out of range for {len} basis functions")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("spectral density not available for {0}")]
    UnsupportedKernel(String),

    #[error("matrix is not positive definite (last jitter tried: {jitter:e})")]
    NotPositiveDefinite { jitter: f64 },

    #[error("kernel expression error at byte {position}: {message}")]
    KernelParse { position: usize, message: String },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("infeasible split: {0}")]
    InfeasibleSplit(String),

    #[error("{path}: {message}")]
    Load { path: String, message: String },

    #[error("objective is not finite at the starting point")]
    NonFiniteStart,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
