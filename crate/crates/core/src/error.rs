use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CssrError {
    #[error("empty input sequence")]
    EmptySequence,

    #[error("degenerate alphabet: {0}")]
    DegenerateAlphabet(String),

    #[error("symbol {0:?} is not in the alphabet")]
    UnknownSymbol(String),

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed machine: {0}")]
    MalformedMachine(String),

    #[error("machine is not strongly connected")]
    NotStronglyConnected,

    #[error("history is not synchronized to any state")]
    Unsynchronized {
        /// Stationary symbol marginal, usable as a fallback prediction.
        fallback: Vec<f64>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("numerical failure at EM iteration {iteration}: {message}")]
    Numerical { iteration: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CssrError {
    fn from(e: std::io::Error) -> Self {
        CssrError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CssrError>;
