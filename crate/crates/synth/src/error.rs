use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("could not place enough joints on the canvas after {retries} retries")]
    GenerationFailed { retries: usize },
    #[error("invalid generator config: {key}: {reason}")]
    Config { key: String, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("sample {id}: missing file {path}")]
    MissingFile { id: String, path: PathBuf },
    #[error("sample {id}: malformed joint record: {reason}")]
    MalformedJoints { id: String, reason: String },
    #[error("sample {id}: label value {value} out of range")]
    LabelOutOfRange { id: String, value: u8 },
    #[error("sample {id}: {reason}")]
    BadSample { id: String, reason: String },
    #[error("unknown sample id {0}")]
    UnknownId(String),
    #[error("unknown split {0}")]
    UnknownSplit(String),
}

impl SynthError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}
