//! Crate-wide error type.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Operands live over different fields.
    FieldMismatch,
    /// Operands have incompatible shapes or ambient dimensions.
    DimensionMismatch { expected: usize, got: usize },
    /// A constructor argument is outside the supported range.
    InvalidArgument(String),
    /// An enumeration would exceed the configured budget.
    Infeasible { needed: u128, budget: u128 },
    /// A declared precondition does not hold for the given input.
    Precondition(String),
    /// Input text could not be parsed.
    Parse(String),
    /// A verified postcondition failed; this signals a bug, not bad input.
    Internal(String),
    /// A census or verification verdict came out false.
    Verdict(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::FieldMismatch => write!(f, "operands belong to different fields"),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::Infeasible { needed, budget } => {
                write!(f, "enumeration of {needed} elements exceeds budget {budget}")
            }
            Error::Precondition(msg) => write!(f, "precondition violated: {msg}"),
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
            Error::Internal(msg) => write!(f, "internal invariant failed: {msg}"),
            Error::Verdict(msg) => write!(f, "verification verdict failed: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
