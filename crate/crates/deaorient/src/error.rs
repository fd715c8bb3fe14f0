use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum DeaError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry: {0}")]
    NonFinite(String),

    #[error("negative data is not supported: {0}")]
    NegativeData(String),

    #[error("invalid orientation: {0}")]
    InvalidOrientation(String),

    #[error("invalid returns-to-scale specification: {0}")]
    InvalidRts(String),

    #[error("program is infeasible: {0}")]
    Infeasible(String),

    #[error("program is unbounded: {0}")]
    Unbounded(String),

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("oracle size cap exceeded: {0}")]
    OracleCap(String),

    #[error("fast path and bisection disagree: {0}")]
    FastPathMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
