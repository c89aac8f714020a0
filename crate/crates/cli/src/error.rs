use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Input(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("provider failure: {0}")]
    Provider(String),
}

impl CliError {
    /// 1 for validation and input problems, 2 when the model provider failed.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Provider(_) => 2,
            _ => 1,
        }
    }
}
