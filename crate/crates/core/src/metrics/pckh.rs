use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::joints::JointSet;
use crate::taxonomy::{JointId, NUM_JOINTS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JointOutcome {
    Correct,
    Incorrect,
    NotEvaluated,
}

pub type PckhVector = [JointOutcome; NUM_JOINTS];

/// Head-top to upper-neck distance, when both are annotated.
pub fn head_segment_length(gt: &JointSet) -> Option<f64> {
    let top = gt.get(JointId::HEAD_TOP);
    let neck = gt.get(JointId::UPPER_NECK);
    (top.is_present() && neck.is_present()).then(|| top.distance(neck))
}

/// Per-joint PCKh outcome. A joint is correct when its distance to the ground
/// truth is at most `alpha` times the head segment (inclusive). Returns `None`
/// when the ground truth has no head segment.
pub fn pckh(pred: &JointSet, gt: &JointSet, alpha: f64) -> Option<PckhVector> {
    let threshold = alpha * head_segment_length(gt)?;
    let mut out = [JointOutcome::NotEvaluated; NUM_JOINTS];
    for (i, (p, g)) in pred.0.iter().zip(gt.0.iter()).enumerate() {
        if !g.is_present() {
            continue;
        }
        out[i] = if p.is_present() && p.distance(g) <= threshold {
            JointOutcome::Correct
        } else {
            JointOutcome::Incorrect
        };
    }
    Some(out)
}

/// Joint groups reported per column; pelvis and thorax only enter the total.
pub const PCKH_GROUPS: [(&str, [JointId; 2]); 7] = [
    ("Head", [JointId::HEAD_TOP, JointId::UPPER_NECK]),
    ("Shoulder", [JointId::L_SHOULDER, JointId::R_SHOULDER]),
    ("Elbow", [JointId::L_ELBOW, JointId::R_ELBOW]),
    ("Wrist", [JointId::L_WRIST, JointId::R_WRIST]),
    ("Hip", [JointId::L_HIP, JointId::R_HIP]),
    ("Knee", [JointId::L_KNEE, JointId::R_KNEE]),
    ("Ankle", [JointId::L_ANKLE, JointId::R_ANKLE]),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PckhScores {
    /// One entry per [`PCKH_GROUPS`] row; `None` when nothing in the group was
    /// evaluated.
    pub groups: Vec<Option<f64>>,
    /// Correct over evaluated, pooled over every joint.
    pub total: f64,
    pub evaluated: u64,
    pub correct: u64,
}

impl PckhScores {
    pub fn group(&self, name: &str) -> Option<f64> {
        PCKH_GROUPS
            .iter()
            .position(|(n, _)| *n == name)
            .and_then(|i| self.groups[i])
    }
}

pub fn aggregate_pckh<'a>(
    vectors: impl IntoIterator<Item = &'a PckhVector>,
) -> Result<PckhScores, MetricsError> {
    let mut correct = [0u64; NUM_JOINTS];
    let mut evaluated = [0u64; NUM_JOINTS];
    for v in vectors {
        for (i, o) in v.iter().enumerate() {
            match o {
                JointOutcome::Correct => {
                    correct[i] += 1;
                    evaluated[i] += 1;
                }
                JointOutcome::Incorrect => evaluated[i] += 1,
                JointOutcome::NotEvaluated => {}
            }
        }
    }
    let n_eval: u64 = evaluated.iter().sum();
    if n_eval == 0 {
        return Err(MetricsError::NoEvaluatedJoints);
    }
    let n_correct: u64 = correct.iter().sum();
    let groups = PCKH_GROUPS
        .iter()
        .map(|(_, ids)| {
            let e: u64 = ids.iter().map(|j| evaluated[j.index()]).sum();
            let c: u64 = ids.iter().map(|j| correct[j.index()]).sum();
            (e > 0).then(|| c as f64 / e as f64)
        })
        .collect();
    Ok(PckhScores {
        groups,
        total: n_correct as f64 / n_eval as f64,
        evaluated: n_eval,
        correct: n_correct,
    })
}
