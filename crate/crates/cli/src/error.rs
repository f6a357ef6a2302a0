use thiserror::Error;

/// CLI failure classes mapped to exit codes: validation problems exit 1,
/// backend failures exit 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Backend(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Backend(_) => 2,
        }
    }

    pub fn validation(e: impl std::fmt::Display) -> Self {
        CliError::Validation(e.to_string())
    }

    pub fn backend(e: impl std::fmt::Display) -> Self {
        CliError::Backend(e.to_string())
    }
}

impl From<storyaudit::backends::BackendError> for CliError {
    fn from(e: storyaudit::backends::BackendError) -> Self {
        match &e {
            storyaudit::backends::BackendError::Config(_)
            | storyaudit::backends::BackendError::Unknown { .. } => CliError::validation(e),
            _ => CliError::backend(e),
        }
    }
}

impl From<storyaudit::corpus::CorpusError> for CliError {
    fn from(e: storyaudit::corpus::CorpusError) -> Self {
        CliError::validation(e)
    }
}

impl From<storyaudit::lexicons::LexiconError> for CliError {
    fn from(e: storyaudit::lexicons::LexiconError) -> Self {
        CliError::validation(e)
    }
}

impl From<storyaudit::protagonist::ProtagonistError> for CliError {
    fn from(e: storyaudit::protagonist::ProtagonistError) -> Self {
        match &e {
            storyaudit::protagonist::ProtagonistError::Backend { .. } => CliError::backend(e),
            _ => CliError::validation(e),
        }
    }
}

impl From<storyaudit::inference::InferenceError> for CliError {
    fn from(e: storyaudit::inference::InferenceError) -> Self {
        match &e {
            storyaudit::inference::InferenceError::Backend { .. } => CliError::backend(e),
            _ => CliError::validation(e),
        }
    }
}

impl From<storyaudit::metrics::ProbeError> for CliError {
    fn from(e: storyaudit::metrics::ProbeError) -> Self {
        match &e {
            storyaudit::metrics::ProbeError::Backend(_) => CliError::backend(e),
            _ => CliError::validation(e),
        }
    }
}

impl From<storyaudit::metrics::RegressionError> for CliError {
    fn from(e: storyaudit::metrics::RegressionError) -> Self {
        CliError::validation(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::validation(e)
    }
}
