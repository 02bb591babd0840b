use polyproj_core::Error as CoreError;

/// Failure classes, each with its own exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// An embedded check did not pass; the message names it.
    #[error("check failed: {0}")]
    Check(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("resource: {0}")]
    Resource(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Check(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Resource(_) => 3,
        }
    }

    pub fn io<E: std::fmt::Display>(e: E) -> Self {
        CliError::Resource(e.to_string())
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::ResourceLimit { .. } | CoreError::IterationLimit { .. } => CliError::Resource(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}
