//! Error and result types shared across the crate.

use std::io;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Tensor or layer shapes do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A caller-supplied argument violates a precondition.
    #[error("invalid argument: {0}")]
    Validation(String),

    /// Non-finite values or a numerically impossible request.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Malformed file content. The offset points at the first byte that
    /// could not be interpreted.
    #[error("format error at byte {offset}: {detail}")]
    Format { offset: u64, detail: String },

    /// File carries a format version this build does not understand.
    #[error("unsupported format version {found}, expected {expected}")]
    Version { found: u16, expected: u16 },

    /// Architecture or feature requested outside the supported set.
    #[error("out of scope: {0}")]
    OutOfScope(String),

    /// Packet too short to carry any payload after header removal.
    #[error("empty payload: packet carries {len} bytes, need more than {header}")]
    EmptyPayload { len: usize, header: usize },

    /// Discriminator training is impossible with the given sets.
    #[error("cannot train discriminator: {0}")]
    CannotTrain(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Process exit code for CLI front ends: 2 validation, 3 data format,
    /// 4 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Format { .. } | Error::Version { .. } => 3,
            Error::Numeric(_) => 4,
            _ => 2,
        }
    }
}
