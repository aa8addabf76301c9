use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvdError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("step failure: {0}")]
    Step(#[from] evd_core::Error),
    #[error("tolerance breach: {0}")]
    Tolerance(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("format error: {0}")]
    Format(String),
}

impl EvdError {
    /// 1 for anything wrong with the input, 2 for failures while running.
    pub fn exit_code(&self) -> u8 {
        match self {
            EvdError::Config(_) | EvdError::Format(_) => 1,
            EvdError::Step(_) | EvdError::Tolerance(_) | EvdError::Io(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, EvdError>;
