use std::path::PathBuf;

use jpp_net::NetError;
use jpp_synth::SynthError;
use jpp_train::TrainError;
use thiserror::Error;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid config: {key}: {reason}")]
    Config { key: String, reason: String },
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Runtime(_) | CliError::Io { .. } => EXIT_RUNTIME,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Config { key, reason } => CliError::Config { key, reason },
            SynthError::GenerationFailed { .. } => CliError::Runtime(e.to_string()),
            SynthError::Io { ref source, .. } if source.kind() != std::io::ErrorKind::NotFound => {
                CliError::Runtime(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<NetError> for CliError {
    fn from(e: NetError) -> Self {
        match e {
            NetError::Checkpoint(_) => CliError::Data(e.to_string()),
            NetError::Io { ref source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
                CliError::Data(e.to_string())
            }
            NetError::Config(_) | NetError::Resolution { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Config { key, reason } => CliError::Config { key, reason },
            TrainError::Data(s) => s.into(),
            TrainError::Net(n) => n.into(),
            TrainError::Metrics(_) | TrainError::Resume(_) => CliError::Data(e.to_string()),
            TrainError::Io { ref source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
                CliError::Data(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}
