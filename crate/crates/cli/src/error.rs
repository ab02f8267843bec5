use std::path::PathBuf;

use bidguard_core::Error as CoreError;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    /// A file exists but does not follow its schema.
    #[error("{}: {message}", path.display())]
    Schema { path: PathBuf, message: String },
    #[error("invalid instance:\n{0}")]
    InvalidInstance(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    /// A search stopped at its budget; outputs written so far are marked
    /// partial.
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn schema(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for invalid input, 2 for an exhausted budget, 3 for I/O failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Schema { .. } | CliError::InvalidInstance(_) => 1,
            CliError::Core(e) if e.is_budget() => 2,
            CliError::Core(_) => 1,
            CliError::Budget(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}
