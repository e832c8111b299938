use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {0} is zero modulo {1}")]
    InvalidIndex(i64, u32),
    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u32, u32),
    #[error("{0} is not a unit modulo {1}")]
    NotAUnit(i64, u64),
    #[error("invalid character: {0}")]
    InvalidCharacter(String),
    #[error("exponent vector is zero")]
    ZeroVector,
    #[error("argument must be positive")]
    NonPositive,
    #[error("an even number of indices is required, got {0}")]
    OddLength(usize),
    #[error("insufficient precision: {0}")]
    InsufficientPrecision(String),
    #[error("recognition failed: {0}")]
    Recognition(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("{0} is not a {1}-adic integer")]
    NotIntegral(String, u64),
    #[error("bad reduction at p = {0}")]
    BadReduction(u64),
    #[error("inconsistent constraints: {0}")]
    Inconsistent(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
