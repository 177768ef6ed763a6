use thiserror::Error;

/// Failures of a command, each with its own exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Config(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<slb_core::Error> for CliError {
    fn from(err: slb_core::Error) -> CliError {
        use slb_core::Error as E;
        match err {
            E::Config(msg) => CliError::Config(msg),
            E::Internal(msg) => CliError::Internal(msg),
            E::NoConvergence { .. } | E::NotSymmetric { .. } => CliError::Internal(err.to_string()),
            _ => CliError::Config(err.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> CliError {
        CliError::Internal(err.to_string())
    }
}
