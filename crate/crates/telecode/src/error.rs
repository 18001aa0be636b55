use std::path::PathBuf;

use telecode_core::TelecodeError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {field}: {message}")]
    Config { field: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("{path}: unsupported schema major version {found} (expected {expected})")]
    Schema { path: PathBuf, found: u32, expected: u32 },

    #[error("{0}")]
    Core(#[from] TelecodeError),

    #[error("{failed} of {total} tasks failed, see {log}")]
    TasksFailed { failed: usize, total: usize, log: PathBuf },
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 2 for invalid input, 1 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Parse { .. } | CliError::Schema { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
