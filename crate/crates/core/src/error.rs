use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates its documented range.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: String, reason: String },

    /// A structure maps to a degenerate (non-finite) circuit.
    #[error("degenerate sensor structure: {0}")]
    DegenerateStructure(String),

    /// Two frequency responses or channel states are sampled on different grids.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Sensing-state labels are not unique.
    #[error("duplicate sensing state label {0}")]
    DuplicateState(usize),

    /// Every subcarrier has zero gain, so capacity cannot be increased by any allocation.
    #[error("all subcarrier gains are zero; capacity objective is flat")]
    ZeroGains,

    /// Vectors that must share a length do not.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Configuration text could not be parsed or validated. `key` is the dotted key path.
    #[error("config {key}: {reason}")]
    Config { key: String, reason: String },

    /// I/O failure on a named path.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// CSV writer failure on a named destination.
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
