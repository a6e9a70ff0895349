use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("logarithm argument must be a positive integer, got {0}")]
    NonPositiveArgument(String),

    #[error("value must be nonnegative, got {0}")]
    NegativeValue(String),

    #[error("value too large for this operation: {0}")]
    Overflow(String),

    #[error("precision exhausted after {bits} bits while evaluating {what}")]
    PrecisionExhausted { bits: u32, what: String },

    #[error("invalid log-linear encoding: {0}")]
    InvalidLogLinear(String),

    #[error("empty subset")]
    EmptySubset,

    #[error("subset {mask:#b} is not contained in [{n}]")]
    SubsetOutOfRange { mask: u32, n: usize },

    #[error("number of variables {0} outside supported range")]
    UnsupportedArity(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("line {line}: malformed header: {msg}")]
    MalformedHeader { line: usize, msg: String },

    #[error("line {line}: malformed line: {msg}")]
    MalformedLine { line: usize, msg: String },

    #[error("line {line}: symbol {symbol} out of range for variable {var} (alphabet size {size})")]
    SymbolOutOfRange { line: usize, var: usize, symbol: String, size: usize },

    #[error("line {line}: duplicate support point {point}")]
    DuplicateTuple { line: usize, point: String },

    #[error("line {line}: invalid probability {value}: {msg}")]
    InvalidMass { line: usize, value: String, msg: String },

    #[error("mass sum ≠ 1 (got {0})")]
    MassSum(String),

    #[error("invalid distribution: {0}")]
    InvalidPmf(String),

    #[error("invalid vector: {0}")]
    InvalidVector(String),

    #[error("unknown face or generator: {0}")]
    UnknownFace(String),

    #[error("invalid support specification: {0}")]
    InvalidSpec(String),

    #[error("grid of {cells} cells exceeds the oracle cap of {cap}")]
    GridTooLarge { cells: u64, cap: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
