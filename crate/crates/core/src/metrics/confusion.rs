use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::label_map::LabelMap;
use crate::taxonomy::NUM_CLASSES;

/// Pixel counts indexed by (ground truth, prediction).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<u64>,
}

impl Default for ConfusionMatrix {
    fn default() -> Self {
        Self::new()
    }
}

impl ConfusionMatrix {
    pub fn new() -> Self {
        Self {
            counts: vec![0; NUM_CLASSES * NUM_CLASSES],
        }
    }

    #[inline]
    pub fn get(&self, gt: usize, pred: usize) -> u64 {
        self.counts[gt * NUM_CLASSES + pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_sum(&self, gt: usize) -> u64 {
        self.counts[gt * NUM_CLASSES..(gt + 1) * NUM_CLASSES].iter().sum()
    }

    pub fn col_sum(&self, pred: usize) -> u64 {
        (0..NUM_CLASSES).map(|g| self.get(g, pred)).sum()
    }

    pub fn trace(&self) -> u64 {
        (0..NUM_CLASSES).map(|c| self.get(c, c)).sum()
    }

    pub fn add(&mut self, pred: &LabelMap, gt: &LabelMap) -> Result<(), MetricsError> {
        if pred.height() != gt.height() || pred.width() != gt.width() {
            return Err(MetricsError::DimensionMismatch {
                pred: (pred.height(), pred.width()),
                gt: (gt.height(), gt.width()),
            });
        }
        for (&p, &g) in pred.as_raw().iter().zip(gt.as_raw()) {
            self.counts[g as usize * NUM_CLASSES + p as usize] += 1;
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn merged<'a>(parts: impl IntoIterator<Item = &'a ConfusionMatrix>) -> Self {
        let mut out = Self::new();
        for p in parts {
            out.merge(p);
        }
        out
    }
}

/// Returns `acc` with every pixel of the pair added.
pub fn accumulate_confusion(
    pred: &LabelMap,
    gt: &LabelMap,
    mut acc: ConfusionMatrix,
) -> Result<ConfusionMatrix, MetricsError> {
    acc.add(pred, gt)?;
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParsingScores {
    pub overall_accuracy: f64,
    pub mean_accuracy: f64,
    /// `None` for classes with an empty union.
    pub per_class_iou: Vec<Option<f64>>,
    /// `None` for classes absent from the ground truth.
    pub per_class_accuracy: Vec<Option<f64>>,
    pub mean_iou: f64,
}

/// Classes with zero ground-truth pixels are left out of the mean accuracy and
/// classes with an empty union are left out of the mean IoU.
pub fn parsing_scores(acc: &ConfusionMatrix) -> Result<ParsingScores, MetricsError> {
    let total = acc.total();
    if total == 0 {
        return Err(MetricsError::EmptyAccumulator);
    }
    let mut per_class_iou = vec![None; NUM_CLASSES];
    let mut per_class_accuracy = vec![None; NUM_CLASSES];
    for c in 0..NUM_CLASSES {
        let tp = acc.get(c, c);
        let row = acc.row_sum(c);
        let col = acc.col_sum(c);
        if row > 0 {
            per_class_accuracy[c] = Some(tp as f64 / row as f64);
        }
        let union = row + col - tp;
        if union > 0 {
            per_class_iou[c] = Some(tp as f64 / union as f64);
        }
    }
    Ok(ParsingScores {
        overall_accuracy: acc.trace() as f64 / total as f64,
        mean_accuracy: mean_present(&per_class_accuracy),
        mean_iou: mean_present(&per_class_iou),
        per_class_iou,
        per_class_accuracy,
    })
}

fn mean_present(v: &[Option<f64>]) -> f64 {
    let (sum, n) = v
        .iter()
        .flatten()
        .fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}
