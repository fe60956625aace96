use std::io;

use irris_core::RisError;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{key}: {message}")]
    Spec { key: String, message: String },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error(transparent)]
    Core(#[from] RisError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn spec_err(key: &str, message: impl Into<String>) -> HarnessError {
    HarnessError::Spec {
        key: key.to_string(),
        message: message.into(),
    }
}
