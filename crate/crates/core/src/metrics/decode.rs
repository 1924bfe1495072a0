use crate::joints::{Joint, JointSet};
use crate::label_map::LabelMap;
use crate::planes::{HeatmapStack, ScoreMaps};
use crate::taxonomy::{NUM_CLASSES, NUM_JOINTS};

/// Heatmap channels peaking below this are decoded as absent joints.
pub const DEFAULT_DETECT_THRESHOLD: f64 = 0.05;

/// Per-pixel argmax over the 20 class channels; ties go to the lower class.
pub fn decode_parsing(scores: &ScoreMaps) -> LabelMap {
    assert_eq!(scores.channels(), NUM_CLASSES, "parsing scores need 20 channels");
    let n = scores.plane_len();
    let mut best = vec![0u8; n];
    let mut best_v = scores.channel(0).to_vec();
    for c in 1..NUM_CLASSES {
        for (i, &v) in scores.channel(c).iter().enumerate() {
            if v > best_v[i] {
                best_v[i] = v;
                best[i] = c as u8;
            }
        }
    }
    LabelMap::from_raw(scores.height(), scores.width(), best).expect("argmax in range")
}

/// Per-channel peak, refined to sub-cell precision by a parabola through the
/// log-responses of the neighbours (exact for Gaussian peaks), then scaled by
/// `stride` into image coordinates.
pub fn decode_pose(heatmaps: &HeatmapStack, stride: f64, threshold: f64) -> JointSet {
    assert_eq!(heatmaps.channels(), NUM_JOINTS, "pose heatmaps need 16 channels");
    let (h, w) = (heatmaps.height(), heatmaps.width());
    let mut out = JointSet::absent();
    for c in 0..NUM_JOINTS {
        let plane = heatmaps.channel(c);
        let (mut bi, mut bv) = (0usize, f64::NEG_INFINITY);
        for (i, &v) in plane.iter().enumerate() {
            if v > bv {
                bv = v;
                bi = i;
            }
        }
        if !(bv >= threshold) {
            continue;
        }
        let (py, px) = (bi / w, bi % w);
        let dx = if px > 0 && px + 1 < w {
            subcell(plane[bi - 1], bv, plane[bi + 1])
        } else {
            0.0
        };
        let dy = if py > 0 && py + 1 < h {
            subcell(plane[bi - w], bv, plane[bi + w])
        } else {
            0.0
        };
        out.0[c] = Joint::visible((px as f64 + dx) * stride, (py as f64 + dy) * stride);
    }
    out
}

fn subcell(left: f64, centre: f64, right: f64) -> f64 {
    if left <= 0.0 || right <= 0.0 || centre <= 0.0 {
        return 0.0;
    }
    let (l, c, r) = (left.ln(), centre.ln(), right.ln());
    let denom = 2.0 * c - l - r;
    if denom <= 1e-12 {
        return 0.0;
    }
    (0.5 * (r - l) / denom).clamp(-0.5, 0.5)
}
