use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke a documented precondition (shape, length, ordering).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Non-finite values reached the integrator.
    #[error("simulation fault at joint {joint}: {reason}")]
    SimulationFault { joint: usize, reason: String },

    #[error("invalid configuration `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("checkpoint not found: {}", .0.display())]
    MissingCheckpoint(PathBuf),

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    /// A training loss became non-finite.
    #[error("training diverged at env step {step}: {reason}")]
    Diverged { step: u64, reason: String },

    #[error("duplicate population entry {0}")]
    Duplicate(String),

    #[error("output directory {} exists (use --force to overwrite)", .0.display())]
    OutputExists(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }
}
