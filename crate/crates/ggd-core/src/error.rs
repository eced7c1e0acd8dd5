//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("split error: {0}")]
    Split(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("training failed at epoch {epoch}: {message}")]
    Train { epoch: usize, message: String },

    #[error("pair sampling error: {0}")]
    Pair(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("train/test leak: {0}")]
    Leak(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub fn train(epoch: usize, msg: impl Into<String>) -> Self {
        Error::Train {
            epoch,
            message: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
