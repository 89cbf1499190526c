use std::io;
use std::path::PathBuf;

use pcgraph::PcError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("inference diverged (epoch {epoch}, batch {batch}, step {step})")]
    Diverged { epoch: usize, batch: usize, step: usize },
    #[error(transparent)]
    Model(#[from] PcError),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// Process exit status: 3 for numerical divergence, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Diverged { .. } | Self::Model(PcError::Diverged { .. }) => 3,
            _ => 2,
        }
    }
}
