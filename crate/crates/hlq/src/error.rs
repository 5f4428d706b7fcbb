use std::fmt;

/// Crate-wide error type.
///
/// `ParsePi` and `Domain` describe bad inputs; everything else is an
/// internal failure (I/O on a checkpoint file, a non-finite result).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot parse {0:?} as a decimal multiple of pi")]
    ParsePi(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed checkpoint line: {0:?}")]
    Checkpoint(String),
    #[error("evaluation produced a non-finite value")]
    NonFinite,
}

impl Error {
    pub fn domain(msg: impl fmt::Display) -> Self {
        Error::Domain(msg.to_string())
    }

    /// True for errors caused by the caller's input rather than an
    /// internal failure.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::ParsePi(_) | Error::Domain(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
