use std::path::{Path, PathBuf};

use drivesafe_core::io::FormatError;
use thiserror::Error;

/// Errors surfaced by a subcommand. Validation problems exit with 1, I/O
/// problems with 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Validation(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn invalid(msg: impl std::fmt::Display) -> Self {
        CliError::Validation(msg.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Validation(_) => 1,
            CliError::Io { .. } => 2,
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        match e {
            FormatError::Io { path, source } => CliError::Io { path, source },
            schema @ FormatError::Schema { .. } => CliError::Validation(schema.to_string()),
        }
    }
}
