//! Test-time protocol: multi-scale, flip-averaged prediction with all-stage
//! fusion for parsing and last-stage selection for pose.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use jpp_core::metrics::{decode_parsing, decode_pose, DEFAULT_DETECT_THRESHOLD};
use jpp_core::{par, JointSet, LabelMap, Planes, RgbImage, JOINT_SWAP, NUM_CLASSES, NUM_JOINTS, PART_SWAP};
use jpp_net::{image_to_planes, JppNet, ModelKind, NetError, StageOutputs};
use jpp_synth::io::{encode_label_png, poses_to_json, write_file};
use jpp_synth::Dataset;
use serde::{Deserialize, Serialize};

use crate::error::TrainError;
use crate::targets::decode_pose_at_stride;

pub const ARCHIVE_INDEX: &str = "archive.json";

/// Where predictions are decoded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Resolution {
    /// Input image resolution.
    Native,
    /// Network output resolution (input / stride); joints are still
    /// reported in image coordinates.
    Output,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferConfig {
    pub scales: Vec<f64>,
    pub flip: bool,
    pub resolution: Resolution,
    pub detect_threshold: f64,
}

impl Default for InferConfig {
    fn default() -> Self {
        Self {
            scales: vec![0.75, 0.5, 1.25],
            flip: true,
            resolution: Resolution::Native,
            detect_threshold: DEFAULT_DETECT_THRESHOLD,
        }
    }
}

impl InferConfig {
    /// One scale, no flip.
    pub fn single() -> Self {
        Self {
            scales: vec![1.0],
            flip: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.scales.is_empty() || self.scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(TrainError::Config {
                key: "scales".into(),
                reason: "need at least one positive scale".into(),
            });
        }
        Ok(())
    }
}

/// Anything that maps an input image to per-stage outputs.
pub trait StageModel: Sync {
    fn output_stride(&self) -> usize;
    fn run(&self, image: &Planes) -> Result<Vec<StageOutputs>, NetError>;
    /// Whether the model predicts joints at all.
    fn has_pose(&self) -> bool {
        true
    }
}

impl StageModel for JppNet {
    fn output_stride(&self) -> usize {
        self.config.output_stride
    }

    fn run(&self, image: &Planes) -> Result<Vec<StageOutputs>, NetError> {
        self.forward(image)
    }

    fn has_pose(&self) -> bool {
        self.config.kind == ModelKind::Joint
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub labels: LabelMap,
    pub joints: JointSet,
    /// Averaged class probabilities; each pixel sums to one.
    pub probabilities: Planes,
    /// Averaged final-stage heatmaps, when the model predicts pose.
    pub heatmaps: Option<Planes>,
}

pub fn softmax(scores: &Planes) -> Planes {
    let (c, h, w) = scores.shape();
    let n = h * w;
    let s = scores.as_slice();
    let mut out = Planes::zeros(c, h, w);
    let o = out.as_mut_slice();
    for i in 0..n {
        let m = (0..c).map(|k| s[k * n + i]).fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for k in 0..c {
            let e = (s[k * n + i] - m).exp();
            o[k * n + i] = e;
            z += e;
        }
        for k in 0..c {
            o[k * n + i] /= z;
        }
    }
    out
}

fn add_into(acc: &mut Option<Planes>, p: &Planes) {
    match acc {
        Some(a) => a.as_mut_slice().iter_mut().zip(p.as_slice()).for_each(|(x, y)| *x += y),
        None => *acc = Some(p.clone()),
    }
}

fn scaled_side(n: usize, scale: f64, stride: usize) -> usize {
    ((n as f64 * scale / stride as f64).round() as usize).max(1) * stride
}

/// Averages softmax parsing probabilities over scales x flips x stages and
/// final-stage heatmaps over scales x flips, after resizing every map to the
/// target resolution and un-flipping mirrored passes, then decodes once.
pub fn predict<M: StageModel + ?Sized>(model: &M, image: &RgbImage, cfg: &InferConfig) -> Result<Prediction, TrainError> {
    cfg.validate()?;
    let stride = model.output_stride();
    let (h, w) = (image.height(), image.width());
    let (th, tw) = match cfg.resolution {
        Resolution::Native => (h, w),
        Resolution::Output => ((h / stride).max(1), (w / stride).max(1)),
    };
    let mut probs: Option<Planes> = None;
    let mut heat: Option<Planes> = None;
    let (mut n_parse, mut n_pose) = (0usize, 0usize);
    for &s in &cfg.scales {
        let scaled = image.resized(scaled_side(h, s, stride), scaled_side(w, s, stride));
        let flips: &[bool] = if cfg.flip { &[false, true] } else { &[false] };
        for &flip in flips {
            let input = if flip { scaled.flipped() } else { scaled.clone() };
            let stages = model.run(&image_to_planes(&input))?;
            for st in &stages {
                let mut p = softmax(&st.parsing_scores).resized(th, tw);
                if flip {
                    p = p.flipped_with(&PART_SWAP);
                }
                add_into(&mut probs, &p);
                n_parse += 1;
            }
            if let Some(hm) = stages.last().and_then(|st| st.pose_heatmaps.as_ref()) {
                let mut q = hm.resized(th, tw);
                if flip {
                    q = q.flipped_with(&JOINT_SWAP);
                }
                add_into(&mut heat, &q);
                n_pose += 1;
            }
        }
    }
    let mut probabilities = probs.expect("at least one scale");
    probabilities.as_mut_slice().iter_mut().for_each(|v| *v /= n_parse as f64);
    let heatmaps = heat.map(|mut q| {
        q.as_mut_slice().iter_mut().for_each(|v| *v /= n_pose as f64);
        q
    });
    let joints = match (&heatmaps, cfg.resolution) {
        (None, _) => JointSet::absent(),
        (Some(q), Resolution::Native) => decode_pose(q, 1.0, cfg.detect_threshold),
        (Some(q), Resolution::Output) => {
            // the target grid may not be an exact 1/stride of the image
            let js = decode_pose_at_stride(q, 1.0, cfg.detect_threshold);
            let (fx, fy) = (w as f64 / tw as f64, h as f64 / th as f64);
            js.transformed(fx, fy, 0.5 * fx - 0.5, 0.5 * fy - 0.5)
        }
    };
    debug_assert_eq!(probabilities.channels(), NUM_CLASSES);
    debug_assert!(heatmaps.as_ref().is_none_or(|q| q.channels() == NUM_JOINTS));
    Ok(Prediction {
        labels: decode_parsing(&probabilities),
        joints,
        probabilities,
        heatmaps,
    })
}

/// Index written next to an archive so metrics can read it without the
/// producing dataset's manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchiveIndex {
    pub split: String,
    pub ids: Vec<String>,
    pub resolution: Resolution,
}

pub fn archive_label_path(root: &Path, id: &str) -> PathBuf {
    root.join("labels").join(format!("{id}.png"))
}

pub fn archive_poses_path(root: &Path) -> PathBuf {
    root.join("poses.json")
}

fn write_archive(
    root: &Path,
    index: &ArchiveIndex,
    labels: &[LabelMap],
    poses: Option<BTreeMap<String, JointSet>>,
) -> Result<(), TrainError> {
    par::try_map_range(labels.len(), |i| {
        write_file(&archive_label_path(root, &index.ids[i]), &encode_label_png(&labels[i]))
    })?;
    if let Some(poses) = poses {
        write_file(&archive_poses_path(root), poses_to_json(&poses).as_bytes())?;
    }
    let text = serde_json::to_string_pretty(index).expect("index serialises") + "\n";
    write_file(&root.join(ARCHIVE_INDEX), text.as_bytes())?;
    Ok(())
}

/// Predicts every sample of `split` and writes `labels/<id>.png` plus
/// `poses.json` under `out`, in the dataset's own formats. Parsing-only
/// models write no `poses.json`.
pub fn batch_predict<M: StageModel + ?Sized>(
    model: &M,
    data: &Dataset,
    split: &str,
    cfg: &InferConfig,
    out: &Path,
) -> Result<ArchiveIndex, TrainError> {
    let ids = data.ids(split)?.to_vec();
    let preds = par::try_map_range(ids.len(), |i| -> Result<Prediction, TrainError> {
        let image = data.load_image(&ids[i])?;
        predict(model, &image, cfg)
    })?;
    let poses = model
        .has_pose()
        .then(|| ids.iter().cloned().zip(preds.iter().map(|p| p.joints)).collect());
    let labels: Vec<LabelMap> = preds.into_iter().map(|p| p.labels).collect();
    let index = ArchiveIndex {
        split: split.to_string(),
        ids,
        resolution: cfg.resolution,
    };
    write_archive(out, &index, &labels, poses)?;
    Ok(index)
}

/// Writes the ground truth of `split` as a prediction archive.
pub fn export_ground_truth(data: &Dataset, split: &str, out: &Path) -> Result<ArchiveIndex, TrainError> {
    let ids = data.ids(split)?.to_vec();
    let labels = par::try_map_range(ids.len(), |i| data.load_labels(&ids[i]))?;
    let poses = ids
        .iter()
        .map(|id| Ok((id.clone(), data.load_joints(id)?)))
        .collect::<Result<_, TrainError>>()?;
    let index = ArchiveIndex {
        split: split.to_string(),
        ids,
        resolution: Resolution::Native,
    };
    write_archive(out, &index, &labels, Some(poses))?;
    Ok(index)
}
