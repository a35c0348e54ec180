use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid range: {0}")]
    InvalidRange(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Compute(#[from] jcqfi::Error),
    #[error("{failed} of {total} verification checks failed")]
    VerifyFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::VerifyFailed { .. } => 1,
            CliError::Usage(_) | CliError::InvalidRange(_) | CliError::Compute(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}
