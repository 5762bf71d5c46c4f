use std::path::{Path, PathBuf};

pub type Result<T> = std::result::Result<T, CliError>;

/// Everything a command can fail with, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input {path}: {reason}")]
    Input { path: PathBuf, reason: String },

    #[error("{path}: checksum mismatch (manifest {expected}, file {actual})")]
    DigestMismatch { path: PathBuf, expected: String, actual: String },

    #[error(transparent)]
    Core(#[from] pisco_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub fn input(path: &Path, reason: impl Into<String>) -> Self {
        Self::Input { path: path.to_path_buf(), reason: reason.into() }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }

    /// 2 for validation problems, 3 for numerical failures, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Core(e) if e.is_numerical() => 3,
            Self::Io { .. } => 4,
            _ => 2,
        }
    }
}
