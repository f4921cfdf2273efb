use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid bit string: {0}")]
    InvalidBits(String),

    #[error("invalid polynomial `{text}`: {reason}")]
    InvalidPolynomial { text: String, reason: String },

    #[error("register length {got} does not match polynomial degree {expected}")]
    RegisterLength { expected: usize, got: usize },

    #[error("register must be nonzero")]
    ZeroRegister,

    #[error("duplicate constraint position {0}")]
    DuplicateConstraint(usize),

    #[error("constraint position must be at least 1")]
    ZeroPosition,

    #[error("selector sequence is stuck at zero")]
    SelectorStuck,

    #[error("invalid matrix dimensions: N={n}, M={m}, kmax={kmax}")]
    Dimensions { n: usize, m: usize, kmax: usize },

    #[error("no constrained alignment exists: N-M={gap} exceeds (M+1)*kmax with M={m}, kmax={kmax}")]
    Infeasible { gap: usize, m: usize, kmax: usize },

    #[error("matrix computation halted at stop column {0}")]
    Stopped(usize),

    #[error("column {column} was not computed (computed columns: {computed})")]
    ColumnNotComputed { column: usize, computed: usize },

    #[error("malformed path: {0}")]
    MalformedPath(String),

    #[error("cut position {t} outside 2..={max}")]
    CutOutOfRange { t: usize, max: usize },

    #[error("parameter H={h} outside 0..={l}")]
    HOutOfRange { h: usize, l: usize },

    #[error("sequence exhausted after discarding {discarded} bits without reaching {h} hypotheses")]
    TrimExhausted { h: usize, discarded: usize },

    #[error("pattern length {got} does not match register length {expected}")]
    PatternLength { expected: usize, got: usize },

    #[error("invalid pattern string: {0}")]
    InvalidPattern(String),

    #[error("invalid attack configuration: {0}")]
    Config(String),

    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),

    #[error("invalid bench grid: {0}")]
    Grid(String),

    #[error("report serialization: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;
