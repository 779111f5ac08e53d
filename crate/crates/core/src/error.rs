use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("arity {arity} outside supported range 0..={max}")]
    ArityOutOfRange { arity: usize, max: usize },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("value {value} at index {index} outside [-1, 1]")]
    ValueOutOfRange { index: usize, value: f64 },

    #[error("variable index {index} outside 1..={arity}")]
    IndexOutOfRange { index: usize, arity: usize },

    #[error("majority requires odd arity, got {0}")]
    EvenMajority(usize),

    #[error("bias {0} outside [-1, 1]")]
    InvalidBias(f64),

    #[error("{0}")]
    Domain(String),

    #[error("closure would produce about {estimate} members (cap {cap}); use sampling mode instead")]
    CapExceeded { estimate: u128, cap: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("hypothesis fails at eps={eps}: |delta|={lhs} > {rhs}")]
    HypothesisFailed { eps: f64, lhs: f64, rhs: f64 },

    #[error("internal numerical fault: {0}")]
    NumericalFault(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid program: {0}")]
    InvalidProgram(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

/// Parse failure with the byte offset where it was detected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub input: String,
    pub position: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(input: &str, position: usize, message: impl Into<String>) -> Self {
        ParseError {
            input: input.to_string(),
            position: position.min(input.len()),
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} at position {}", self.message, self.position)?;
        writeln!(f, "  {}", self.input)?;
        write!(f, "  {}^", " ".repeat(self.position))
    }
}
