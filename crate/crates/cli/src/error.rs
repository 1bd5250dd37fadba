use std::path::{Path, PathBuf};

use thiserror::Error;

/// Everything that can end a run, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flag, config-file entry or header field (exit code 2).
    #[error("{field}: {msg}")]
    Usage { field: String, msg: String },
    /// Unreadable or unwritable file (exit code 3).
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Readable file with malformed contents (exit code 3).
    #[error("{}: line {line}: {msg}", path.display())]
    Malformed { path: PathBuf, line: usize, msg: String },
    /// Readable file without usable data (exit code 3).
    #[error("{}: {msg}", path.display())]
    NoData { path: PathBuf, msg: String },
    /// A numerical invariant of the simulation was violated (exit code 4).
    #[error("numerical error: {0}")]
    Numerical(#[from] hse_core::Error),
}

impl CliError {
    pub fn usage(field: &str, msg: impl Into<String>) -> Self {
        CliError::Usage { field: field.to_string(), msg: msg.into() }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage { .. } => 2,
            CliError::Io { .. } | CliError::Malformed { .. } | CliError::NoData { .. } => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
