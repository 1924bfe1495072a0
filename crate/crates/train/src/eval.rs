//! Scores a prediction archive against a dataset split.

use std::collections::BTreeMap;
use std::path::Path;

use jpp_core::metrics::{aggregate_pckh, factor_report, parsing_scores, pckh, ConfusionMatrix, FactorTable, ParsingScores, PckhScores, SampleEval};
use jpp_core::par;
use jpp_synth::io::{read_label_png, read_poses};
use jpp_synth::{Dataset, SynthError};
use serde::{Deserialize, Serialize};

use crate::error::TrainError;
use crate::infer::{archive_label_path, archive_poses_path, ArchiveIndex, Resolution, ARCHIVE_INDEX};

pub const PCKH_ALPHA: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub split: String,
    pub samples: usize,
    pub parsing: ParsingScores,
    /// `None` when no ground-truth sample has a head segment.
    pub pose: Option<PckhScores>,
    pub factors: FactorTable,
}

pub fn read_archive_index(root: &Path) -> Result<ArchiveIndex, TrainError> {
    let path = root.join(ARCHIVE_INDEX);
    let text = std::fs::read_to_string(&path).map_err(|e| TrainError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| {
        TrainError::Data(SynthError::Format {
            path,
            reason: e.to_string(),
        })
    })
}

/// Evaluates every sample listed in the archive. Output-resolution
/// archives are scored against nearest-downsampled ground truth. Archives
/// without `poses.json` get no pose scores.
pub fn evaluate_archive(archive: &Path, data: &Dataset) -> Result<EvalReport, TrainError> {
    let index = read_archive_index(archive)?;
    let poses_path = archive_poses_path(archive);
    let pred_poses = if poses_path.exists() { Some(read_poses(&poses_path)?) } else { None };
    let evals = par::try_map_range(index.ids.len(), |i| -> Result<SampleEval, TrainError> {
        let id = &index.ids[i];
        let pred = read_label_png(&archive_label_path(archive, id), id)?;
        let mut gt = data.load_labels(id)?;
        if index.resolution == Resolution::Output {
            gt = gt.resized(pred.height(), pred.width());
        }
        let mut confusion = ConfusionMatrix::new();
        confusion.add(&pred, &gt)?;
        let pckh = match &pred_poses {
            Some(poses) => {
                let pj = poses.get(id).ok_or_else(|| SynthError::MalformedJoints {
                    id: id.clone(),
                    reason: "no record in the prediction poses.json".into(),
                })?;
                pckh(pj, &data.load_joints(id)?, PCKH_ALPHA)
            }
            None => None,
        };
        Ok(SampleEval {
            id: id.clone(),
            confusion,
            pckh,
        })
    })?;
    report(&index.split, data, &evals)
}

pub fn report(split: &str, data: &Dataset, evals: &[SampleEval]) -> Result<EvalReport, TrainError> {
    let tags: BTreeMap<_, _> = evals.iter().map(|e| (e.id.clone(), data.factors(&e.id))).collect();
    let confusion = ConfusionMatrix::merged(evals.iter().map(|e| &e.confusion));
    Ok(EvalReport {
        split: split.to_string(),
        samples: evals.len(),
        parsing: parsing_scores(&confusion)?,
        pose: aggregate_pckh(evals.iter().filter_map(|e| e.pckh.as_ref())).ok(),
        factors: factor_report(&tags, evals)?,
    })
}
