//! Process-level error classes and the exit-code contract: 0 success,
//! 1 numerical or I/O failure, 2 configuration or usage failure.

use std::fmt;
use std::path::PathBuf;

#[derive(Debug)]
pub enum CliError {
    /// Failure from the numerical core; its own classification decides the
    /// exit code.
    Core(ptqm_core::Error),
    /// Malformed configuration, sweep specification, or flag combination.
    Config { message: String },
    /// Filesystem failure on a named path.
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn config(message: impl Into<String>) -> CliError {
        CliError::Config { message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_config() => 2,
            CliError::Core(_) => 1,
            CliError::Config { .. } => 2,
            CliError::Io { .. } => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Config { message } => write!(f, "config: {message}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ptqm_core::Error> for CliError {
    fn from(e: ptqm_core::Error) -> CliError {
        CliError::Core(e)
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Wraps an I/O result with the path it touched.
pub fn at_path<T>(path: &std::path::Path, r: std::io::Result<T>) -> Result<T> {
    r.map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}
