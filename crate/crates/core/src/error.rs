use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid alphabet: {0}")]
    Alphabet(String),

    #[error("invalid distribution: {0}")]
    Distribution(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("axis sets overlap or are out of range: {0}")]
    Axes(String),

    #[error("invalid channel: {0}")]
    Channel(String),

    #[error("length mismatch: expected {expected}, got {got} ({what})")]
    Length {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("block length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("{what} exceeds the exact-computation budget ({size} > {cap})")]
    Budget {
        what: &'static str,
        size: u128,
        cap: u128,
    },

    #[error("support condition violated: {0}")]
    Support(String),

    #[error("parameter out of range: {0}")]
    Range(String),

    #[error("target rate {target} outside the achievable interval [I(X;Z), I(X;Z|Y)] = [{lo}, {hi}]")]
    InfeasibleTarget { target: f64, lo: f64, hi: f64 },

    #[error("channel case mismatch: {0}")]
    CaseMismatch(String),

    #[error("not enough samples: {got} given, at least {needed} required")]
    Samples { got: usize, needed: usize },

    #[error("descriptor error: {0}")]
    Descriptor(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
