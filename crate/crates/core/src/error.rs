use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported rotation dimension {0} (closed-form bases exist only for 1, 2, 4, 8)")]
    UnsupportedDimension(usize),
    #[error("input vector has zero or denormal norm")]
    ZeroNorm,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("length {len} is not divisible by block size {block}")]
    NotDivisible { len: usize, block: usize },
    #[error("invalid stage dimensions: {0}")]
    InvalidStages(String),
    #[error("transcript does not match the block structure: {0}")]
    TranscriptMismatch(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
