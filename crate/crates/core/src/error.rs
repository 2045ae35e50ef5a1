use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed record at {path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("git error: {0}")]
    Git(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no {language} diffs in corpus")]
    EmptyLanguage { language: String },

    #[error("author {author} has {got} commits, need at least {need}")]
    InsufficientCommits { author: String, got: usize, need: usize },

    #[error("minute index {index} outside timeline of length {len}")]
    OutOfRange { index: usize, len: usize },

    #[error("observation sequence has zero likelihood at minute {0}")]
    ZeroLikelihood(usize),

    #[error("feature width mismatch: model expects {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("truncated mixture has no mass in [{lo}, {hi}]")]
    NoMass { lo: f64, hi: f64 },

    #[error("correlation undefined: {0}")]
    Degenerate(String),

    #[error("empty selection: {0}")]
    EmptySelection(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
