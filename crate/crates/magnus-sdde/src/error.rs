//! Error type shared by all modules of the crate.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A time, delay, or horizon does not sit on the required mesh/lattice.
    #[error("mesh alignment: {0}")]
    MeshAlignment(String),

    /// Step size too large for delayed double integrals: h must not exceed
    /// the smallest delay.
    #[error("step size {h} exceeds smallest delay {tau_min}")]
    StepSize { h: f64, tau_min: f64 },

    /// A scheme was asked to run without the inputs it needs (Jacobians,
    /// mixed integrals, delayed integrals, ...).
    #[error("configuration: {0}")]
    Configuration(String),

    #[error("lookup: {0}")]
    Lookup(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("parse error: {0}")]
    Parse(String),

    /// Malformed lattice dump (bad magic, version, or truncated payload).
    #[error("lattice file format: {0}")]
    Format(String),

    #[error("i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
