use std::io;

use thiserror::Error;

/// Errors raised across the simulator, dataset, and training code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate rotation input: {0}")]
    DegenerateInput(&'static str),

    #[error("clearance {0} m outside [0.001, 0.004]")]
    InvalidClearance(f64),

    #[error("episode already finished")]
    EpisodeFinished,

    #[error("expert failure: {0}")]
    ExpertFailure(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite loss at step {step}")]
    NonFiniteLoss { step: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
