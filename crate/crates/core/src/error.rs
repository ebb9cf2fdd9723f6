use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("duplicate node {0} in basis")]
    DuplicateNode(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("cannot parse rational `{0}`")]
    BadRational(String),

    #[error("empty sample set")]
    EmptySamples,

    #[error("sample source exhausted: needed {needed} samples, {available} available")]
    SamplesExhausted { needed: u64, available: u64 },

    #[error("malformed linear program: {0}")]
    MalformedLp(String),

    #[error("stage {stage}: {survivors} survivors exceed the bound {bound}")]
    SurvivorBound {
        stage: usize,
        survivors: usize,
        bound: usize,
    },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
