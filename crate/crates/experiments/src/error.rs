use std::path::PathBuf;

use irs_core::error::IrsError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExpError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Model(#[from] IrsError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("analytic/Monte Carlo gate failed: {0}")]
    Gate(String),
}

impl ExpError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Model(_) => 2,
            Self::Gate(_) => 3,
            Self::Io { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, ExpError>;
