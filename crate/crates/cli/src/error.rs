use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    /// A comparison or invariant check did not hold.
    #[error("{0}")]
    Failed(String),

    #[error(transparent)]
    Core(#[from] cfqkd_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for bad input, 1 for failed checks and internal faults.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_user_error() => 2,
            CliError::Failed(_) | CliError::Core(_) | CliError::Io(_) => 1,
        }
    }
}
