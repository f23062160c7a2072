use std::io;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input: r = {r}, y = {y}")]
    NonFinite { r: f64, y: f64 },

    #[error("operation `{op}` requires a bounded-factor family, `{family}` is general")]
    Unsupported { op: &'static str, family: String },

    #[error("orbit escaped the domain at step {step}")]
    Escaped { step: usize },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("mismatch: {0}")]
    Mismatch(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
