//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Inputs outside an operation's stated domain (nonpositive time,
    /// unsupported dimension, invalid exponent, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical procedure failed to meet its tolerance or diverged
    /// where it should not have.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// An operation was called on an object in the wrong state
    /// (e.g. missing earlier time slices).
    #[error("invalid state: {0}")]
    State(String),
}

pub type Result<T> = std::result::Result<T, Error>;
