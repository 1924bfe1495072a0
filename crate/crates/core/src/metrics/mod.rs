//! Evaluation protocol: pixel accuracy and IoU for parsing, PCKh for pose,
//! map decoding, and per-challenge-factor breakdowns.

mod confusion;
mod decode;
mod factors;
mod pckh;

pub use confusion::{accumulate_confusion, parsing_scores, ConfusionMatrix, ParsingScores};
pub use decode::{decode_parsing, decode_pose, DEFAULT_DETECT_THRESHOLD};
pub use factors::{factor_report, FactorRow, FactorTable, SampleEval};
pub use pckh::{
    aggregate_pckh, head_segment_length, pckh, JointOutcome, PckhScores, PckhVector, PCKH_GROUPS,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("prediction {pred:?} and ground truth {gt:?} differ in size")]
    DimensionMismatch {
        pred: (usize, usize),
        gt: (usize, usize),
    },
    #[error("confusion matrix is empty")]
    EmptyAccumulator,
    #[error("no joints were evaluated")]
    NoEvaluatedJoints,
    #[error("sample {0} has no challenge-factor entry")]
    UntaggedSample(String),
}
