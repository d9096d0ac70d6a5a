use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// Invalid arithmetic never produces a quiet NaN-like value; it surfaces here.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("undefined operation: {0}")]
    Undefined(&'static str),

    #[error("division by an enclosure that contains zero")]
    DivisionByZero,

    #[error("logarithm of a non-positive value")]
    LogDomain,

    #[error("exponential argument out of supported range")]
    ExpRange,

    /// The iteration cap was reached before the enclosure settled on one grid point.
    #[error("sampler did not terminate within {iterations} iterations")]
    Bottom { iterations: u32 },

    #[error("replay tape exhausted after {consumed} bits")]
    TapeExhausted { consumed: u64 },

    #[error("sample rounded to an infinite grid point")]
    Overflow,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("grid too large for exhaustive enumeration: {0}")]
    GridTooLarge(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
