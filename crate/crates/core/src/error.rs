use thiserror::Error;

/// Errors produced by the estimator library and the benchmark harness.
#[derive(Debug, Error)]
pub enum HrfError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("singular matrix: diagonal entry {index} is zero")]
    SingularMatrix { index: usize },

    #[error("out of domain: {0}")]
    OutOfDomain(String),

    #[error("degenerate distribution: raw estimate sum {sum} is not positive ({negatives} of {len} entries negative)")]
    DegenerateDistribution { sum: f64, negatives: usize, len: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HrfError>;

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(HrfError::DimensionMismatch { expected, actual });
    }
    Ok(())
}
