use num_bigint::BigUint;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, RisError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RisError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The Gram matrix `H_eq H_eq^H` is singular or too badly conditioned to invert.
    #[error("rank-deficient equivalent channel (condition estimate {condition:e})")]
    RankDeficient { condition: f64 },

    #[error("exhaustive search refused: predicted {predicted} evaluations exceeds cap {cap}")]
    BudgetExceeded { predicted: BigUint, cap: u64 },

    #[error("no configuration satisfies the SINR targets")]
    Infeasible,
}

impl RisError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        RisError::InvalidArgument(msg.into())
    }
}
