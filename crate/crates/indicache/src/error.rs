use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument was outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// Instance too large for the exhaustive solver; use the greedy solver.
    #[error("{count} caches exceed the exhaustive solver limit of {max}; use the greedy solver")]
    TooLarge { count: usize, max: usize },

    /// A serialized indicator did not match the wire format.
    #[error("malformed indicator bytes: {0}")]
    Malformed(String),

    /// A trace file could not be ingested.
    #[error("trace {path}: line {line}: {message}")]
    Trace {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
