use jpp_core::metrics::decode_parsing;
use jpp_core::selfsup::{joint_structure_loss, pseudo_joints_from_parsing, structure_sensitive_loss};
use jpp_core::{HeatmapStack, LabelMap, Planes, ScoreMaps, NUM_CLASSES};
use jpp_net::StageOutputs;
use serde::{Deserialize, Serialize};

use crate::config::TrainConfig;
use crate::error::TrainError;

/// Mean pixel-wise softmax cross-entropy and its gradient w.r.t. the scores.
pub fn parsing_loss(scores: &ScoreMaps, gt: &LabelMap) -> Result<(f64, ScoreMaps), TrainError> {
    let (c, h, w) = scores.shape();
    if c != NUM_CLASSES || (h, w) != (gt.height(), gt.width()) {
        return Err(TrainError::Shape(format!(
            "scores {:?} vs labels {}x{}",
            scores.shape(),
            gt.height(),
            gt.width()
        )));
    }
    let n = h * w;
    let s = scores.as_slice();
    let mut grad = Planes::zeros(c, h, w);
    let g = grad.as_mut_slice();
    let mut total = 0.0;
    let inv = 1.0 / n as f64;
    for (i, &label) in gt.as_raw().iter().enumerate() {
        let m = (0..c).map(|k| s[k * n + i]).fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = (0..c).map(|k| (s[k * n + i] - m).exp()).sum();
        let lse = m + z.ln();
        total += lse - s[label as usize * n + i];
        for k in 0..c {
            g[k * n + i] = (s[k * n + i] - lse).exp() * inv;
        }
        g[label as usize * n + i] -= inv;
    }
    Ok((total * inv, grad))
}

/// Mean squared error over every channel and pixel, with its gradient.
pub fn pose_loss(pred: &HeatmapStack, gt: &HeatmapStack) -> Result<(f64, HeatmapStack), TrainError> {
    if !pred.same_shape(gt) {
        return Err(TrainError::Shape(format!("{:?} vs {:?}", pred.shape(), gt.shape())));
    }
    let n = pred.as_slice().len() as f64;
    let (c, h, w) = pred.shape();
    let mut grad = Planes::zeros(c, h, w);
    let mut sum = 0.0;
    for ((g, p), t) in grad.as_mut_slice().iter_mut().zip(pred.as_slice()).zip(gt.as_slice()) {
        let d = p - t;
        sum += d * d;
        *g = 2.0 * d / n;
    }
    Ok((sum / n, grad))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossMode {
    Joint,
    Ss,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureTerms {
    pub l_joint: f64,
    /// Stage-weighted parsing loss the joint term multiplies.
    pub l_parsing: f64,
    pub l_structure: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub parsing: Vec<f64>,
    pub pose: Vec<f64>,
    pub parsing_weights: Vec<f64>,
    pub pose_weights: Vec<f64>,
    pub structure: Option<StructureTerms>,
    pub total: f64,
}

/// Targets at output resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct Targets {
    pub labels: LabelMap,
    /// `None` in ss mode, which never sees joint annotations.
    pub heatmaps: Option<HeatmapStack>,
}

/// Gradient seeds for one stage: d total / d parsing scores and, for the
/// joint model, d total / d heatmaps.
pub type StageGrads = (ScoreMaps, Option<HeatmapStack>);

/// Joint mode: `sum_s wp_s * parsing_s + sum_s wq_s * pose_s`.
/// Ss mode: `l_joint * sum_s wp_s * parsing_s`, where `l_joint` compares
/// pseudo-joints of the decoded final-stage parsing with those of the
/// ground truth and is held constant for the gradient.
pub fn total_loss(
    stages: &[StageOutputs],
    targets: &Targets,
    cfg: &TrainConfig,
    mode: LossMode,
) -> Result<(LossBreakdown, Vec<StageGrads>), TrainError> {
    let mut b = LossBreakdown {
        parsing: vec![],
        pose: vec![],
        parsing_weights: vec![],
        pose_weights: vec![],
        structure: None,
        total: 0.0,
    };
    let mut grads = Vec::with_capacity(stages.len());
    let mut weighted_parsing = 0.0;
    for (s, out) in stages.iter().enumerate() {
        let (l, mut g) = parsing_loss(&out.parsing_scores, &targets.labels)?;
        let wp = cfg.parsing_weight(s);
        scale(&mut g, wp);
        b.parsing.push(l);
        b.parsing_weights.push(wp);
        weighted_parsing += wp * l;
        let gq = match (mode, &out.pose_heatmaps, &targets.heatmaps) {
            (LossMode::Joint, Some(pred), Some(gt)) => {
                let (l, mut g) = pose_loss(pred, gt)?;
                let wq = cfg.pose_weight(s);
                scale(&mut g, wq);
                b.pose.push(l);
                b.pose_weights.push(wq);
                b.total += wq * l;
                Some(g)
            }
            (LossMode::Joint, Some(_), None) => {
                return Err(TrainError::Shape("joint mode needs heatmap targets".into()))
            }
            _ => None,
        };
        grads.push((g, gq));
    }
    match mode {
        LossMode::Joint => b.total += weighted_parsing,
        LossMode::Ss => {
            let last = &stages.last().expect("at least one stage").parsing_scores;
            let (_, h, w) = last.shape();
            let pred = decode_parsing(last);
            let sigma = cfg.structure_sigma;
            let (l_joint, _) = joint_structure_loss(
                &pseudo_joints_from_parsing(&pred, h, w, sigma),
                &pseudo_joints_from_parsing(&targets.labels, h, w, sigma),
            )
            .map_err(|e| TrainError::Shape(e.to_string()))?;
            let l_structure = structure_sensitive_loss(l_joint, weighted_parsing);
            for (g, _) in &mut grads {
                scale(g, l_joint);
            }
            b.structure = Some(StructureTerms {
                l_joint,
                l_parsing: weighted_parsing,
                l_structure,
            });
            b.total = l_structure;
        }
    }
    Ok((b, grads))
}

fn scale(p: &mut Planes, s: f64) {
    p.as_mut_slice().iter_mut().for_each(|v| *v *= s);
}
