use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MicroError {
    #[error("invalid prime {0}")]
    InvalidPrime(u64),
    #[error("prime mismatch: {0} vs {1}")]
    PrimeMismatch(u64, u64),
    #[error("precision {prec} unsupported for p = {prime} (max {max})")]
    PrecisionUnsupported { prime: u64, prec: u32, max: u32 },
    #[error("precision exhausted: cancellation left no known digits")]
    PrecisionExhausted,
    #[error("division by zero")]
    DivisionByZero,
    #[error("valuation overflow")]
    Overflow,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("invalid axis {axis} for dimension {dim}")]
    InvalidAxis { axis: usize, dim: usize },
    #[error("not certifiable: {0}")]
    NotCertifiable(String),
    #[error("insufficient truncation: {0}")]
    InsufficientTruncation(String),
    #[error("window overflow: exponent {exponent} outside cap ±{cap}")]
    WindowOverflow { exponent: i64, cap: i64 },
    #[error("zero operator")]
    ZeroOperator,
    #[error("operator is not positive")]
    NotPositive,
    #[error("not invertible: {0}")]
    NotInvertible(String),
    #[error("undecidable finiteness: {0}")]
    UndecidableFiniteness(String),
    #[error("invalid level: {0}")]
    InvalidLevel(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed data: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, MicroError>;
