use alloc::string::String;

/// Errors raised by the dispatch core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A documented precondition was not met by the caller.
    #[error("contract violation: {0}")]
    Contract(String),
    /// Configuration values are outside their valid ranges.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// Input or layout widths do not agree.
    #[error("shape mismatch: expected {expected}, got {got} ({what})")]
    Shape { what: &'static str, expected: usize, got: usize },
    /// `backward` called without a matching `forward`.
    #[error("backward called before a matching forward pass")]
    CallOrder,
    /// Not enough data to carry out the request.
    #[error("insufficient data: {0}")]
    Insufficient(String),
    /// Training produced a non-finite loss.
    #[error("training diverged at step {step}: {detail}")]
    Diverged { step: usize, detail: String },
    /// A policy bundle was used with the wrong kind of input.
    #[error("policy kind mismatch: {0}")]
    KindMismatch(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
