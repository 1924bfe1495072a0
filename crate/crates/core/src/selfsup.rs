//! Structure-sensitive supervision derived from parsing maps alone.
//!
//! Parsing classes are merged into nine body regions; the centroid of each
//! region becomes a pseudo-joint rendered as a Gaussian heatmap. The squared
//! distance between the pseudo-joint heatmaps of a prediction and of its
//! ground truth gives the joint structure loss, which then scales the
//! pixel-wise parsing loss.

use std::sync::OnceLock;

use thiserror::Error;

use crate::label_map::LabelMap;
use crate::planes::{render_gaussian, HeatmapStack, Planes};
use crate::taxonomy::{PartLabel, PseudoJointId, NUM_CLASSES, NUM_PSEUDO_JOINTS};

/// Default Gaussian width at network output resolution.
pub const DEFAULT_SIGMA: f64 = 3.0;

/// Parsing classes merged into each pseudo-joint region. Dress, jumpsuit,
/// gloves, socks and background belong to no region.
pub const MERGE_RULES: [(PseudoJointId, &[PartLabel]); NUM_PSEUDO_JOINTS] = [
    (
        PseudoJointId::HEAD,
        &[PartLabel::HAT, PartLabel::HAIR, PartLabel::SUNGLASSES, PartLabel::FACE],
    ),
    (
        PseudoJointId::UPPER_BODY,
        &[PartLabel::UPPER_CLOTHES, PartLabel::COAT, PartLabel::SCARF],
    ),
    (PseudoJointId::LOWER_BODY, &[PartLabel::PANTS, PartLabel::SKIRT]),
    (PseudoJointId::LEFT_ARM, &[PartLabel::LEFT_ARM]),
    (PseudoJointId::RIGHT_ARM, &[PartLabel::RIGHT_ARM]),
    (PseudoJointId::LEFT_LEG, &[PartLabel::LEFT_LEG]),
    (PseudoJointId::RIGHT_LEG, &[PartLabel::RIGHT_LEG]),
    (PseudoJointId::LEFT_SHOE, &[PartLabel::LEFT_SHOE]),
    (PseudoJointId::RIGHT_SHOE, &[PartLabel::RIGHT_SHOE]),
];

/// Class index -> region index, built once; panics if two rules claim the
/// same class.
fn region_of_class() -> &'static [Option<u8>; NUM_CLASSES] {
    static TABLE: OnceLock<[Option<u8>; NUM_CLASSES]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [None; NUM_CLASSES];
        for (pj, classes) in MERGE_RULES {
            for c in classes {
                assert!(
                    t[c.index()].is_none(),
                    "merge rules overlap on class {}",
                    c.name()
                );
                t[c.index()] = Some(pj.index() as u8);
            }
        }
        t
    })
}

pub fn region_for(label: PartLabel) -> Option<PseudoJointId> {
    region_of_class()[label.index()].map(|i| PseudoJointId::all().nth(i as usize).unwrap())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMask {
    pub height: usize,
    pub width: usize,
    pub bits: Vec<bool>,
}

impl BinaryMask {
    pub fn empty(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            bits: vec![false; height * width],
        }
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }
}

/// One mask per pseudo-joint region.
pub fn merge_parts(m: &LabelMap) -> Vec<BinaryMask> {
    let table = region_of_class();
    let mut masks = vec![BinaryMask::empty(m.height(), m.width()); NUM_PSEUDO_JOINTS];
    for (i, &v) in m.as_raw().iter().enumerate() {
        if let Some(r) = table[v as usize] {
            masks[r as usize].bits[i] = true;
        }
    }
    masks
}

/// Mean pixel coordinate `(x, y)` of the mask.
pub fn region_center(mask: &BinaryMask) -> Option<(f64, f64)> {
    let (mut sx, mut sy, mut n) = (0u64, 0u64, 0u64);
    for (i, &b) in mask.bits.iter().enumerate() {
        if b {
            sx += (i % mask.width) as u64;
            sy += (i / mask.width) as u64;
            n += 1;
        }
    }
    (n > 0).then(|| (sx as f64 / n as f64, sy as f64 / n as f64))
}

/// Region centroids of a label map in one pass.
pub fn region_centers(m: &LabelMap) -> [Option<(f64, f64)>; NUM_PSEUDO_JOINTS] {
    let table = region_of_class();
    let mut acc = [(0u64, 0u64, 0u64); NUM_PSEUDO_JOINTS];
    let w = m.width();
    for (i, &v) in m.as_raw().iter().enumerate() {
        if let Some(r) = table[v as usize] {
            let a = &mut acc[r as usize];
            a.0 += (i % w) as u64;
            a.1 += (i / w) as u64;
            a.2 += 1;
        }
    }
    acc.map(|(sx, sy, n)| (n > 0).then(|| (sx as f64 / n as f64, sy as f64 / n as f64)))
}

/// Channel `k` holds a unit Gaussian at `centers[k]`, or zeros when absent.
pub fn render_pseudo_heatmaps(
    centers: &[Option<(f64, f64)>],
    height: usize,
    width: usize,
    sigma: f64,
) -> HeatmapStack {
    assert!(sigma > 0.0, "sigma must be positive");
    let mut out = Planes::zeros(centers.len(), height, width);
    for (k, c) in centers.iter().enumerate() {
        if let Some((x, y)) = *c {
            render_gaussian(out.channel_mut(k), height, width, x, y, sigma);
        }
    }
    out
}

/// Pseudo-joint heatmaps of a label map at `height x width`; centroids are
/// scaled from label-map to heatmap coordinates.
pub fn pseudo_joints_from_parsing(
    m: &LabelMap,
    height: usize,
    width: usize,
    sigma: f64,
) -> HeatmapStack {
    let sx = width as f64 / m.width() as f64;
    let sy = height as f64 / m.height() as f64;
    let centers = region_centers(m).map(|c| c.map(|(x, y)| (x * sx, y * sy)));
    render_pseudo_heatmaps(&centers, height, width, sigma)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SelfSupError {
    #[error("heatmap stacks differ in shape: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize, usize), (usize, usize, usize)),
    #[error("expected {NUM_PSEUDO_JOINTS} pseudo-joint channels, got {0}")]
    ChannelCount(usize),
}

/// Squared heatmap error summed over channels, divided by `2N` where `N` is
/// the number of non-empty ground-truth channels. Returns `(loss, N)`; the
/// loss is 0 when `N == 0`.
pub fn joint_structure_loss(
    predicted: &HeatmapStack,
    ground_truth: &HeatmapStack,
) -> Result<(f64, usize), SelfSupError> {
    if !predicted.same_shape(ground_truth) {
        return Err(SelfSupError::ShapeMismatch(predicted.shape(), ground_truth.shape()));
    }
    if ground_truth.channels() != NUM_PSEUDO_JOINTS {
        return Err(SelfSupError::ChannelCount(ground_truth.channels()));
    }
    let n = (0..NUM_PSEUDO_JOINTS)
        .filter(|&k| !ground_truth.channel_is_zero(k))
        .count();
    if n == 0 {
        return Ok((0.0, 0));
    }
    let sq: f64 = predicted
        .as_slice()
        .iter()
        .zip(ground_truth.as_slice())
        .map(|(p, g)| (p - g) * (p - g))
        .sum();
    Ok((sq / (2.0 * n as f64), n))
}

/// The parsing loss weighted by the joint structure loss. The weight is a
/// constant: no gradient flows back through the centroid extraction.
#[inline]
pub fn structure_sensitive_loss(l_joint: f64, l_parsing: f64) -> f64 {
    l_joint * l_parsing
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StructureLossReport {
    pub l_joint: f64,
    pub l_parsing: f64,
    pub l_structure: f64,
    pub n_present: usize,
}

/// Full structure-sensitive evaluation of a decoded prediction.
pub fn structure_report(
    predicted: &LabelMap,
    ground_truth: &LabelMap,
    l_parsing: f64,
    height: usize,
    width: usize,
    sigma: f64,
) -> StructureLossReport {
    let cp = pseudo_joints_from_parsing(predicted, height, width, sigma);
    let cgt = pseudo_joints_from_parsing(ground_truth, height, width, sigma);
    let (l_joint, n_present) = joint_structure_loss(&cp, &cgt).expect("same pipeline, same shape");
    StructureLossReport {
        l_joint,
        l_parsing,
        l_structure: structure_sensitive_loss(l_joint, l_parsing),
        n_present,
    }
}
