use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),
    #[error("domain is not compact: {0}")]
    NonCompact(String),
    #[error("insufficient moment order: need {needed}, have {available}")]
    InsufficientOrder { needed: usize, available: usize },
    #[error("unsupported preimage: {0}")]
    UnsupportedPreimage(String),
    #[error("no constructive adjoint for {0}")]
    NoConstructiveAdjoint(String),
    #[error("operator has non-constant coefficients")]
    NonConstantCoefficients,
    #[error("budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn dim(expected: usize, found: usize) -> Self {
        Error::DimensionMismatch { expected, found }
    }
}
