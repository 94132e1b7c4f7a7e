use thiserror::Error;

/// Errors raised by the sketch structures and their estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SketchError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index} is outside the domain [0, {domain})")]
    IndexOutOfDomain { index: u64, domain: u64 },

    #[error("level {level} exceeds the deepest level {max}")]
    LevelOutOfRange { level: usize, max: usize },

    #[error("cannot merge: {0}")]
    Incompatible(String),

    #[error("no collision-free row for item {0}")]
    NoCollisionFreeRow(u64),

    #[error("level recovery failed: {0}")]
    RecoveryFailed(String),

    #[error("malformed sketch data: {0}")]
    Format(String),

    #[error("unsupported regime: {0}")]
    Unsupported(String),
}

pub type Result<T, E = SketchError> = std::result::Result<T, E>;
