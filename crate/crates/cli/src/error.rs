use std::path::PathBuf;

/// Errors of the command-line layer, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Invalid or incomplete configuration; nothing was run.
    #[error("configuration error: {0}")]
    Config(String),
    /// Failure while running a validated configuration.
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) | CliError::Io { .. } => 3,
        }
    }

    pub(crate) fn config(e: impl std::fmt::Display) -> Self {
        CliError::Config(e.to_string())
    }

    pub(crate) fn runtime(e: impl std::fmt::Display) -> Self {
        CliError::Runtime(e.to_string())
    }
}
