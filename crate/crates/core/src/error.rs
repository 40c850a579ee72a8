use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("n must be at least 3, got {0}")]
    InvalidN(usize),

    #[error("digit {digit} at position {index} is not 0 or 1")]
    NonBinaryDigit { index: usize, digit: u8 },

    #[error("orbit escaped the domain [0, {max}] at x = {x}")]
    OrbitEscape { x: f64, max: f64 },

    #[error("explicit coin stream exhausted after {0} bits")]
    StreamExhausted(usize),

    #[error("precondition violated: x = {x} is not in {expected}")]
    Precondition { x: f64, expected: &'static str },

    /// A point of the removed countable set: return time 1, or an exact
    /// landing on a or b.
    #[error("deleted point: {reason} (x = {x})")]
    DeletedPoint { x: f64, reason: &'static str },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("theorem check failed: {0}")]
    TheoremViolation(String),

    #[error("unsupported target: {0}")]
    UnsupportedTarget(String),

    #[error("sample too short: need at least {needed} symbols, got {got}")]
    InsufficientSample { needed: usize, got: usize },

    #[error("invalid input: {0}")]
    Domain(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
