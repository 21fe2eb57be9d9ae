use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("direction must be a unit vector, got norm {norm}")]
    NonUnitDirection { norm: f64 },

    #[error("state is not normalized: squared norm {norm_sqr}")]
    NotNormalized { norm_sqr: f64 },

    #[error("unsupported state dimension {0}; expected 2 or 4")]
    InvalidDimension(usize),

    #[error("outcome must be 0 or 1, got {0}")]
    InvalidOutcome(u8),

    #[error("unsupported bit count n = {n}: {reason}")]
    UnsupportedBitCount { n: usize, reason: &'static str },

    #[error("enumeration for n = {n} would visit {count} strategies; refusing")]
    EnumerationTooLarge { n: usize, count: u128 },

    #[error("correlation table has no entry for (i = {i}, j = {j})")]
    MissingEntry { i: usize, j: usize },

    #[error("Bell value {value} is outside the algebraic range [-{max}, {max}] for n = {n}")]
    BellOutOfRange { n: usize, value: f64, max: f64 },

    #[error("mixture weights must be non-negative and sum to 1 (sum = {sum})")]
    InvalidWeights { sum: f64 },

    #[error("bit count mismatch: expected {expected}, got {got}")]
    BitCountMismatch { expected: usize, got: usize },

    #[error("amplitudes do not satisfy a^2 + b^2 = 1 (a = {a}, b = {b})")]
    AmplitudeNormalization { a: f64, b: f64 },

    #[error("no shots recorded")]
    ZeroShots,

    #[error("query index {query} out of range for {n} input bits")]
    QueryOutOfRange { query: usize, n: usize },

    #[error("{0} is not of the form 2^k 3^j")]
    NotSmooth(usize),

    #[error("invalid bases: {0}")]
    InvalidBases(String),

    #[error("invalid tree description at byte {pos}: {msg}")]
    TreeParse { pos: usize, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
