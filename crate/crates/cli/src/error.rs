use std::path::PathBuf;

use thiserror::Error;

/// Operational failures. Verdict failures are not errors; they are reported
/// through [`crate::pipeline::ExperimentReport::pass`].
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: towerprod_core::Error,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input {}: {message}", path.display())]
    Input { path: PathBuf, message: String },
}

pub trait Context<T> {
    fn context(self, what: impl Into<String>) -> Result<T, CliError>;
}

impl<T> Context<T> for towerprod_core::Result<T> {
    fn context(self, what: impl Into<String>) -> Result<T, CliError> {
        self.map_err(|source| match source {
            towerprod_core::Error::FoldNotIntegrable(msg) => CliError::Precondition(msg),
            source => CliError::Core { context: what.into(), source },
        })
    }
}
