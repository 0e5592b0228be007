use thiserror::Error;

/// Errors raised by the sampling library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("randomization value {0} is outside the open interval (0, 1)")]
    AlphaOutOfRange(f64),

    #[error("item {id}: weight {weight} is not a finite nonnegative number")]
    InvalidWeight { id: u64, weight: f64 },

    #[error(
        "item {0}: a zero-weight item cannot carry a secondary value; \
         weight it by |secondary| instead"
    )]
    ZeroWeightSecondary(u64),

    #[error("sample size k must be at least 1")]
    ZeroSampleSize,

    #[error("exact oracle supports at most {max} items, got {got}")]
    OracleTooLarge { max: usize, got: usize },

    #[error("item index {index} out of range for {len} items")]
    ItemOutOfRange { index: usize, len: usize },

    #[error("inclusion probabilities are infeasible: {0}")]
    InfeasibleMarginals(String),

    #[error("invalid trace specification: {0}")]
    InvalidTrace(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid predicate: {0}")]
    InvalidPredicate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
