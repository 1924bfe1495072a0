//! Training targets at network output resolution.
//!
//! Map cell `u` covers image pixels around `(u + 0.5) * stride - 0.5`, the
//! same half-pixel convention bilinear resizing uses, so targets, resized
//! predictions and decoded joints agree.

use jpp_core::metrics::decode_pose;
use jpp_core::planes::render_gaussian;
use jpp_core::{HeatmapStack, Joint, JointSet, LabelMap, NUM_JOINTS};

pub fn image_to_map(v: f64, stride: f64) -> f64 {
    (v + 0.5) / stride - 0.5
}

pub fn map_to_image(u: f64, stride: f64) -> f64 {
    (u + 0.5) * stride - 0.5
}

/// One unit Gaussian per annotated joint (visible or occluded); absent
/// joints get an all-zero channel.
pub fn gt_pose_heatmaps(joints: &JointSet, height: usize, width: usize, stride: f64, sigma: f64) -> HeatmapStack {
    assert!(sigma > 0.0, "sigma must be positive");
    let mut out = HeatmapStack::zeros(NUM_JOINTS, height, width);
    for (c, j) in joints.0.iter().enumerate() {
        if j.is_present() {
            render_gaussian(
                out.channel_mut(c),
                height,
                width,
                image_to_map(j.x, stride),
                image_to_map(j.y, stride),
                sigma,
            );
        }
    }
    out
}

/// Decodes heatmaps at map resolution into image coordinates.
pub fn decode_pose_at_stride(maps: &HeatmapStack, stride: f64, threshold: f64) -> JointSet {
    let mut js = decode_pose(maps, 1.0, threshold);
    for j in js.0.iter_mut().filter(|j| j.is_present()) {
        *j = Joint {
            x: map_to_image(j.x, stride),
            y: map_to_image(j.y, stride),
            vis: j.vis,
        };
    }
    js
}

/// Nearest-neighbour label map at loss resolution.
pub fn gt_labels_at(labels: &LabelMap, height: usize, width: usize) -> LabelMap {
    labels.resized(height, width)
}
