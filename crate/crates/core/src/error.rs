use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// Input text could not be parsed (malformed JSON, bad rational literal, ...).
    #[error("parse error: {0}")]
    Parse(String),

    /// Input parsed but violates a structural invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// A parameter-free problem was required.
    #[error("problem has free parameters {0:?}; instantiate it first")]
    Parameterized(Vec<String>),

    #[error("unknown action sequence `{0}`")]
    UnknownLeaf(String),

    #[error("unknown state `{0}`")]
    UnknownState(String),

    #[error("invalid probability weights: {0}")]
    InvalidWeights(String),

    #[error("dimension mismatch: {0}")]
    Shape(String),

    /// Pure deviation-rule enumeration would exceed the configured cap.
    #[error("instance too large: {count} pure deviation rules exceed the cap of {cap}")]
    SizeGuard { count: String, cap: u64 },

    #[error("unsupported request: {0}")]
    Unsupported(String),

    /// Both or neither side of a duality dichotomy succeeded. Always a bug.
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
