use thiserror::Error;

/// Errors produced by the generator, its building blocks and the harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A seed or bit stream ran out before the consumer was satisfied.
    #[error("seed underflow{}: needed {needed} bits, {available} available", family_suffix(.family))]
    SeedUnderflow {
        needed: usize,
        available: usize,
        family: Option<usize>,
    },

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("no closed-form oracle: {0}")]
    NotClosedForm(String),
}

fn family_suffix(family: &Option<usize>) -> String {
    match family {
        Some(i) => format!(" in family {i}"),
        None => String::new(),
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
