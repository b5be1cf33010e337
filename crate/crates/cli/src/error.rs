use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) | CliError::Output(_) => 3,
            CliError::Resource(_) => 4,
        }
    }
}

impl From<relayopt::Error> for CliError {
    fn from(e: relayopt::Error) -> Self {
        match e {
            relayopt::Error::GridTooLarge { .. } | relayopt::Error::TooManyRelays { .. } => {
                CliError::Resource(e.to_string())
            }
            _ => CliError::Solver(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}
