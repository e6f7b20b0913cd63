use thiserror::Error;

/// Errors raised by the series machinery.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("index {index} outside stream range [{start}, {end}]")]
    Index { index: u64, start: u64, end: u64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("no polynomial envelope a_n < r n^-alpha on the alpha grid")]
    NoEnvelope,
    #[error("stream is not flagged nonincreasing")]
    Monotonicity,
    #[error("planted root base is not positive at n = {0}")]
    NegativeBase(u64),
    #[error("rate error at row {row}: {msg}")]
    Rate { row: usize, msg: String },
    #[error("step map error: {0}")]
    Step(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
