use thiserror::Error;

/// Runner-level failures, split by the exit code they map to: config
/// problems exit 3, runtime problems exit 4 (usage problems exit 2 before
/// any of this is reached).
#[derive(Debug, Error)]
pub enum RunnerError {
    /// The config text is not well-formed.
    #[error("config parse error: {0}")]
    Parse(String),

    /// The config is well-formed but violates a constraint.
    #[error("config validation error: {0}")]
    Validation(String),

    #[error(transparent)]
    Core(#[from] prola::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunnerError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            RunnerError::Parse(_) | RunnerError::Validation(_) => 3,
            RunnerError::Core(_) | RunnerError::Io(_) => 4,
        }
    }
}
