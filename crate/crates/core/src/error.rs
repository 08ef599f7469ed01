use thiserror::Error;

use crate::linalg::LinalgError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("assumption check failed: {0}")]
    Assumption(String),

    #[error("Riccati iteration did not converge after {iterations} iterations (last change {last_change:e})")]
    DareNoConvergence { iterations: usize, last_change: f64 },

    #[error("non-finite {signal} at step {step}")]
    NonFinite { step: usize, signal: &'static str },

    #[error("{signal} exceeded ceiling {ceiling:e} at step {step} (norm {norm:e})")]
    Unbounded {
        step: usize,
        signal: &'static str,
        norm: f64,
        ceiling: f64,
    },

    #[error("trace: {0}")]
    Trace(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
