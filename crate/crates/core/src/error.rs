// SPDX-License-Identifier: Apache-2.0
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },

    #[error("malformed index stream: {0}")]
    MalformedStream(String),

    #[error("plan exceeds crossbar capacity on planes {planes:?}: {detail}")]
    Capacity { planes: Vec<usize>, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
