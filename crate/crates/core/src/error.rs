use thiserror::Error;

/// Errors raised by the circle-method routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("modulus must be at least 1")]
    ZeroModulus,

    #[error("numerator {a} is not coprime to modulus {q}")]
    NotCoprime { a: i64, q: u64 },

    #[error("window {index} reaches zero: mu*N - H = {lower} <= 0")]
    WindowReachesZero { index: usize, lower: f64 },

    #[error("budget exceeded in {what}: needed {needed}, cap {cap}")]
    BudgetExceeded {
        what: &'static str,
        needed: u128,
        cap: u128,
    },

    #[error("exact integer width exceeded in {0}")]
    Overflow(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
