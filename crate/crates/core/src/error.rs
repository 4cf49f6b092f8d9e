use thiserror::Error;

/// Errors raised by lattice construction, solving and checking.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("index {index} out of range for a system of {len} equations")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("function `{name}` is not monotone: {witness}")]
    NotMonotone { name: String, witness: String },

    #[error("arity mismatch: function `{name}` has arity {found}, system has {expected} equations")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error("fixpoint iteration did not converge after {iterations} iterations (last value {last})")]
    NonConvergence { iterations: usize, last: String },

    #[error("move enumeration exceeded its budget of {budget} ({what})")]
    MoveBudgetExceeded { budget: usize, what: String },

    #[error("up-to function `{name}` fails {property}: {witness}")]
    UpToProperty {
        name: String,
        property: String,
        witness: String,
    },

    #[error("up-to tuple is not compatible with the system: {0}")]
    Incompatible(String),

    #[error("function does not preserve meets: {0}")]
    NotMeetPreserving(String),

    #[error("{0}")]
    BasisMismatch(String),

    #[error("malformed play: {0}")]
    MalformedPlay(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

impl Error {
    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
