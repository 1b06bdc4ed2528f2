use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum CondrepError {
    #[error("invalid joint law: {0}")]
    InvalidJoint(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("condition (D) does not hold, constructive g is unavailable")]
    ConditionDViolated,
    #[error("subset of rows must be nonempty")]
    EmptyA,
    #[error("instance too large: {0} rows, limit {1}")]
    TooLarge(usize, usize),
    #[error("inadmissible cell (m={m}, k={k}): need m >= 3 and 2 <= k <= 4^m/2 - 3")]
    RangeError { m: u32, k: u64 },
    #[error("x = {0} is outside the open unit interval")]
    DomainError(f64),
    #[error("call surface violates no-arbitrage: {0}")]
    ArbitrageError(String),
    #[error("particle cloud is empty")]
    EmptyCloud,
    #[error("particle state became non-finite at step {0}")]
    NonFiniteState(usize),
    #[error("conditional variance denominator below floor at bin {0}")]
    DegenerateDenominator(usize),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CondrepError>;
