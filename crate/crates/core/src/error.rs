use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QsrError {
    /// Structurally malformed input (wrong amplitude count, bad JSON shape).
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("label collision: {0}")]
    LabelCollision(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("total dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("invalid density operator: {0}")]
    InvalidDensity(String),
    #[error("matrix is not an isometry (residual {0:e})")]
    NotIsometric(f64),
    #[error("invalid subset: {0}")]
    InvalidSubset(String),
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("missing l-value for subset {0}")]
    MissingLValue(String),
    #[error("invalid state spec: {0}")]
    InvalidSpec(String),
    #[error("numerical inconsistency: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, QsrError>;
