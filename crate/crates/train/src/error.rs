use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid config: {key}: {reason}")]
    Config { key: String, reason: String },
    #[error(transparent)]
    Data(#[from] jpp_synth::SynthError),
    #[error(transparent)]
    Net(#[from] jpp_net::NetError),
    #[error(transparent)]
    Metrics(#[from] jpp_core::metrics::MetricsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("training diverged in phase {phase} at epoch {epoch}, step {step}: loss {loss}")]
    Diverged {
        phase: String,
        epoch: usize,
        step: usize,
        loss: f64,
    },
    #[error("cannot resume: {0}")]
    Resume(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

impl TrainError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the input data rather than the computation.
    pub fn is_data_error(&self) -> bool {
        matches!(self, Self::Data(_) | Self::Metrics(_))
    }
}
