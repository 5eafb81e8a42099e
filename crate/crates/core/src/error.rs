use thiserror::Error;

use crate::prob::Symbol;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvidenceError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("alphabet mismatch: expected size {expected}, got {actual}")]
    AlphabetMismatch { expected: usize, actual: usize },

    #[error("symbol {symbol} outside alphabet of size {size}")]
    SymbolOutOfRange { symbol: Symbol, size: usize },

    /// The null assigns zero probability to an observed symbol.
    #[error(
        "absolute continuity violated at step {step}: null gives symbol {symbol} probability 0"
    )]
    AbsoluteContinuityViolation { step: usize, symbol: Symbol },

    #[error("mixture weights must be nonnegative with total at most 1 (got total {total})")]
    WeightViolation { total: f64 },

    #[error("scale factor must lie in (0, 1], got {0}")]
    ScaleViolation(f64),

    #[error("enumeration depth {depth} exceeds the limit {max}")]
    DepthTooLarge { depth: usize, max: usize },

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("exact-arithmetic budget exceeded: n = {n} > {max}")]
    BudgetExceeded { n: usize, max: usize },

    #[error("code-length family has no entry for prefix {0:?}")]
    MissingPrefix(Vec<Symbol>),

    #[error("conformal e-value needs at least one calibration example")]
    EmptyCalibration,

    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for EvidenceError {
    fn from(e: std::io::Error) -> Self {
        EvidenceError::Io(e.to_string())
    }
}

pub type Result<T, E = EvidenceError> = std::result::Result<T, E>;
