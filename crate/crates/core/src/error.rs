use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of a function.
    #[error("domain error in {function}: {detail}")]
    Domain {
        function: &'static str,
        detail: String,
    },
    /// A method was applied to an input it does not support
    /// (e.g. the wrapped-Gaussian series on a Tikhonov law).
    #[error("usage error: {0}")]
    Usage(String),
    /// The input concentrates on a point, so the requested entropy diverges.
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// A formula was requested for a channel outside its preconditions.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// The quantity is not defined for this model.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// Monte-Carlo run too small to give a stable estimate.
    #[error("insufficient samples: got {got}, need at least {need} ({hint})")]
    InsufficientSamples {
        got: usize,
        need: usize,
        hint: &'static str,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(function: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        function,
        detail: detail.into(),
    }
}
