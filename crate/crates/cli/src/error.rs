use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] maass_periods::Error),
    #[error("{0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for invalid input, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if !e.is_validation() => 3,
            _ => 2,
        }
    }
}
