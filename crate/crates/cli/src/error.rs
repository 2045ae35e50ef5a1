use std::path::Path;

use thiserror::Error;

/// Failure of a command, mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Data(String),

    #[error(transparent)]
    Core(#[from] stdcoder::Error),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) | CliError::Core(_) => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Attach a path to a core error raised while reading it.
pub fn at_path<T>(path: &Path, r: stdcoder::Result<T>) -> CliResult<T> {
    r.map_err(|e| match e {
        stdcoder::Error::Io { .. } | stdcoder::Error::Parse { .. } => CliError::Core(e),
        other => CliError::Data(format!("{}: {other}", path.display())),
    })
}
