use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error(
        "positivity violated at step {step} (t = {time:.4}): min eigenvalue {min_eigenvalue:.3e}; \
         reduce dt (currently {dt:.3e})"
    )]
    Positivity {
        step: usize,
        time: f64,
        dt: f64,
        min_eigenvalue: f64,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },

    #[error("unsupported file version {found} (expected {expected})")]
    Version { found: u16, expected: u16 },

    #[error("missing prerequisite `{artifact}`; produce it with `{command}`")]
    MissingArtifact { artifact: String, command: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParam { .. } => 2,
            Error::Io(_)
            | Error::Csv(_)
            | Error::Format(_)
            | Error::Checksum { .. }
            | Error::Version { .. }
            | Error::MissingArtifact { .. }
            | Error::Shape(_) => 3,
            Error::Positivity { .. } | Error::Numerical(_) => 4,
        }
    }
}
