use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A data file failed to parse; `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A run produced a non-finite function or gradient value and was aborted.
    #[error("non-finite {quantity} at outer iteration {iteration}; run aborted")]
    NonFinite {
        iteration: usize,
        quantity: &'static str,
    },

    /// The per-iteration trust-region shrink cap was exhausted.
    #[error("trust-region shrink cap ({cap}) exceeded at outer iteration {iteration}")]
    ShrinkCapExceeded { iteration: usize, cap: usize },

    /// An internal relation that the algorithm guarantees was violated.
    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),

    /// Every repetition of an experiment aborted.
    #[error("all {0} runs failed")]
    AllRunsFailed(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
