use thiserror::Error;

/// Errors raised by the simulator and the tree algorithms.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum Error {
    /// An argument was out of range or otherwise invalid for the call.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// An input structure (tree, list) violates its invariants.
    #[error("malformed structure: {0}")]
    Structure(String),
    /// A contraction operation was applied outside its preconditions.
    #[error("contract violation: {0}")]
    Contract(String),
    /// Text input could not be parsed.
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    /// Two independent constructions disagreed.
    #[error("internal consistency check failed: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
