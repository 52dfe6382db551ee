use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid user input; `path` names the offending field.
    #[error("{path}: {message}")]
    Validation { path: String, message: String },

    #[error("malformed document: {0}")]
    Parse(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Wav { path: PathBuf, message: String },

    #[error("gain table integrity: {0}")]
    Integrity(String),

    #[error("sample rate {signal} Hz does not match gain table ({table} Hz); rebuild the table for this rate")]
    SampleRateMismatch { signal: u32, table: u32 },

    #[error("signal too short: {len} samples, need at least {min}")]
    TooShort { len: usize, min: usize },

    #[error("length mismatch: {0} vs {1} samples")]
    LengthMismatch(usize, usize),

    #[error("empty input")]
    Empty,

    #[error("root not bracketed: {0}")]
    NotBracketed(String),

    #[error("{failed} of {total} corpus files failed")]
    PartialCorpus { failed: usize, total: usize },
}

impl Error {
    pub fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Wav { .. } | Error::Integrity(_) => 2,
            Error::PartialCorpus { .. } => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
