use std::io;

use thiserror::Error;

/// Errors raised by generation, reconstruction and evaluation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("calibration failed: {0}")]
    CalibrationFailure(String),

    #[error("no seed clique found in amoeba iteration {iteration}: {reason}")]
    SeedNotFound { iteration: usize, reason: String },

    #[error("distance estimate unavailable for ({u}, {v}): {reason}")]
    EstimateUnavailable { u: u32, v: u32, reason: String },

    #[error("resource limit exceeded: {0}")]
    ResourceExceeded(String),

    #[error("adaptive EDP found no (p, h) pair with a connected pruned graph")]
    AdaptiveFailure,

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
