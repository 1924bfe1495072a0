use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{aggregate_pckh, parsing_scores, ConfusionMatrix, MetricsError, ParsingScores};
use super::{PckhScores, PckhVector};
use crate::factor::ChallengeFactor;

/// Per-sample evaluation result, ready to be pooled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleEval {
    pub id: String,
    pub confusion: ConfusionMatrix,
    /// `None` when the ground truth has no head segment.
    pub pckh: Option<PckhVector>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorRow {
    /// `None` for the all-samples row.
    pub factor: Option<ChallengeFactor>,
    pub samples: usize,
    /// `None` when the subset is empty.
    pub parsing: Option<ParsingScores>,
    /// `None` when no sample in the subset has a head segment.
    pub pose: Option<PckhScores>,
}

impl FactorRow {
    pub fn label(&self) -> &'static str {
        self.factor.map_or("all", |f| f.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorTable {
    pub overall: FactorRow,
    pub rows: Vec<FactorRow>,
}

fn pool<'a>(factor: Option<ChallengeFactor>, subset: &[&'a SampleEval]) -> FactorRow {
    let confusion = ConfusionMatrix::merged(subset.iter().map(|s| &s.confusion));
    FactorRow {
        factor,
        samples: subset.len(),
        parsing: parsing_scores(&confusion).ok(),
        pose: aggregate_pckh(subset.iter().filter_map(|s| s.pckh.as_ref())).ok(),
    }
}

/// Re-scores the evaluation on every challenge-factor subset.
pub fn factor_report(
    tags: &BTreeMap<String, Vec<ChallengeFactor>>,
    samples: &[SampleEval],
) -> Result<FactorTable, MetricsError> {
    for s in samples {
        if !tags.contains_key(&s.id) {
            return Err(MetricsError::UntaggedSample(s.id.clone()));
        }
    }
    let all: Vec<&SampleEval> = samples.iter().collect();
    let rows = ChallengeFactor::ALL
        .iter()
        .map(|&f| {
            let subset: Vec<&SampleEval> = samples
                .iter()
                .filter(|s| tags[&s.id].contains(&f))
                .collect();
            pool(Some(f), &subset)
        })
        .collect();
    Ok(FactorTable {
        overall: pool(None, &all),
        rows,
    })
}
