use thiserror::Error;

/// Errors raised by model construction, evaluation and inference.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PcError {
    #[error("invalid layer spec: {0}")]
    InvalidSpec(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("index out of range: {0}")]
    Domain(String),
    #[error("inference diverged at step {step}")]
    Diverged { step: usize },
    #[error("structure error: {0}")]
    Structure(String),
    #[error("feedforward initialization not applicable: {0}")]
    InitNotApplicable(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, PcError>;

pub(crate) fn expect_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got == want {
        Ok(())
    } else {
        Err(PcError::Dimension(format!("{what}: expected length {want}, got {got}")))
    }
}
