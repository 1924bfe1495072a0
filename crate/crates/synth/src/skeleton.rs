use std::f64::consts::PI;

use jpp_core::joints::{inside, quantize_coord};
use jpp_core::{Joint, JointId, JointSet, NUM_JOINTS, JOINT_SWAP};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::SynthError;

/// One parent-to-child limb. The angle is absolute, in image coordinates
/// (0 points along +x, PI/2 points down).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bone {
    pub parent: JointId,
    pub child: JointId,
    pub length: (f64, f64),
    pub angle: (f64, f64),
}

/// Region of the canvas (as fractions of height and width) where the pelvis
/// is placed, with a relative sampling weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub weight: f64,
    pub x: (f64, f64),
    pub y: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkeletonSpec {
    /// Ordered so that every parent is placed before its children.
    pub bones: Vec<Bone>,
    pub anchors: Vec<Anchor>,
    pub max_retries: usize,
    /// Minimum number of joints that must land on the canvas.
    pub min_joints: usize,
}

fn bone(parent: JointId, child: JointId, len: f64, angle: (f64, f64)) -> Bone {
    Bone {
        parent,
        child,
        length: (len * 0.9, len * 1.1),
        angle,
    }
}

/// Mirror an angle range about the vertical axis.
fn mirrored((lo, hi): (f64, f64)) -> (f64, f64) {
    (PI - hi, PI - lo)
}

impl SkeletonSpec {
    /// Frontal bodies scaled to a canvas. The subject faces the viewer, so the
    /// right side of the body appears on the left of the image.
    pub fn for_canvas(height: usize, width: usize) -> Self {
        let s = height.min(width) as f64;
        let up = -PI / 2.0;
        let down = PI / 2.0;
        let r_upper_arm = (0.45 * PI, 1.05 * PI);
        let r_forearm = (0.40 * PI, 1.10 * PI);
        let r_thigh = (down - 0.12, down + 0.35);
        let r_shin = (down - 0.20, down + 0.30);
        let bones = vec![
            bone(JointId::PELVIS, JointId::THORAX, 0.22 * s, (up - 0.12, up + 0.12)),
            bone(JointId::THORAX, JointId::UPPER_NECK, 0.05 * s, (up - 0.1, up + 0.1)),
            bone(JointId::UPPER_NECK, JointId::HEAD_TOP, 0.12 * s, (up - 0.2, up + 0.2)),
            bone(JointId::THORAX, JointId::R_SHOULDER, 0.10 * s, (PI - 0.15, PI + 0.05)),
            bone(JointId::THORAX, JointId::L_SHOULDER, 0.10 * s, mirrored((PI - 0.15, PI + 0.05))),
            bone(JointId::R_SHOULDER, JointId::R_ELBOW, 0.14 * s, r_upper_arm),
            bone(JointId::L_SHOULDER, JointId::L_ELBOW, 0.14 * s, mirrored(r_upper_arm)),
            bone(JointId::R_ELBOW, JointId::R_WRIST, 0.13 * s, r_forearm),
            bone(JointId::L_ELBOW, JointId::L_WRIST, 0.13 * s, mirrored(r_forearm)),
            bone(JointId::PELVIS, JointId::R_HIP, 0.065 * s, (PI - 0.1, PI + 0.1)),
            bone(JointId::PELVIS, JointId::L_HIP, 0.065 * s, mirrored((PI - 0.1, PI + 0.1))),
            bone(JointId::R_HIP, JointId::R_KNEE, 0.19 * s, r_thigh),
            bone(JointId::L_HIP, JointId::L_KNEE, 0.19 * s, mirrored(r_thigh)),
            bone(JointId::R_KNEE, JointId::R_ANKLE, 0.19 * s, r_shin),
            bone(JointId::L_KNEE, JointId::L_ANKLE, 0.19 * s, mirrored(r_shin)),
        ];
        Self {
            bones,
            anchors: vec![
                // whole body in frame
                Anchor { weight: 0.6, x: (0.42, 0.58), y: (0.52, 0.58) },
                // legs below the bottom edge
                Anchor { weight: 0.2, x: (0.40, 0.60), y: (0.80, 0.90) },
                // head above the top edge
                Anchor { weight: 0.2, x: (0.40, 0.60), y: (0.12, 0.20) },
            ],
            max_retries: 32,
            min_joints: 4,
        }
    }

    /// Only the full-body anchor.
    pub fn full_body_only(mut self) -> Self {
        self.anchors.truncate(1);
        self.anchors[0].weight = 1.0;
        self
    }
}

/// Image positions of all 16 joints, including those off the canvas.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose(pub [(f64, f64); NUM_JOINTS]);

impl Pose {
    pub fn get(&self, id: JointId) -> (f64, f64) {
        self.0[id.index()]
    }

    /// Mirror inside an image of the given width, exchanging sides.
    pub fn flipped(&self, width: usize) -> Self {
        let mut out = self.0;
        for (i, &(x, y)) in self.0.iter().enumerate() {
            out[JOINT_SWAP[i] as usize] = ((width - 1) as f64 - x, y);
        }
        Self(out)
    }

    /// Mirror positions without exchanging sides: the same body seen from
    /// behind.
    pub fn mirrored(&self, width: usize) -> Self {
        Self(self.0.map(|(x, y)| ((width - 1) as f64 - x, y)))
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self(self.0.map(|(x, y)| (x + dx, y + dy)))
    }

    /// Annotation on a canvas: on-canvas joints visible, the rest absent.
    pub fn annotate(&self, height: usize, width: usize) -> JointSet {
        let mut j = JointSet::absent();
        for (i, &(x, y)) in self.0.iter().enumerate() {
            if inside(x, y, height, width) {
                j.0[i] = Joint::visible(x, y);
            }
        }
        j
    }
}

fn sample_range<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Sample a full pose, retrying until enough joints land on the canvas.
pub fn sample_pose<R: Rng + ?Sized>(
    rng: &mut R,
    (height, width): (usize, usize),
    spec: &SkeletonSpec,
) -> Result<Pose, SynthError> {
    let total: f64 = spec.anchors.iter().map(|a| a.weight).sum();
    for _ in 0..=spec.max_retries {
        let mut pick = rng.random_range(0.0..total);
        let anchor = spec
            .anchors
            .iter()
            .find(|a| {
                pick -= a.weight;
                pick < 0.0
            })
            .unwrap_or(&spec.anchors[spec.anchors.len() - 1]);
        let mut pos = [(f64::NAN, f64::NAN); NUM_JOINTS];
        pos[JointId::PELVIS.index()] = (
            quantize_coord(sample_range(rng, anchor.x) * width as f64),
            quantize_coord(sample_range(rng, anchor.y) * height as f64),
        );
        for b in &spec.bones {
            let (px, py) = pos[b.parent.index()];
            debug_assert!(!px.is_nan(), "bones out of order");
            let len = sample_range(rng, b.length);
            let ang = sample_range(rng, b.angle);
            pos[b.child.index()] = (
                quantize_coord(px + len * ang.cos()),
                quantize_coord(py + len * ang.sin()),
            );
        }
        let pose = Pose(pos);
        if pose.annotate(height, width).present_count() >= spec.min_joints {
            return Ok(pose);
        }
    }
    Err(SynthError::GenerationFailed {
        retries: spec.max_retries,
    })
}

/// Annotated joints of a freshly sampled pose.
pub fn sample_skeleton<R: Rng + ?Sized>(
    rng: &mut R,
    canvas: (usize, usize),
    spec: &SkeletonSpec,
) -> Result<JointSet, SynthError> {
    Ok(sample_pose(rng, canvas, spec)?.annotate(canvas.0, canvas.1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bones_form_tree_rooted_at_pelvis() {
        let spec = SkeletonSpec::for_canvas(128, 128);
        assert_eq!(spec.bones.len(), NUM_JOINTS - 1);
        let mut placed = vec![JointId::PELVIS];
        for b in &spec.bones {
            assert!(placed.contains(&b.parent));
            assert!(!placed.contains(&b.child));
            placed.push(b.child);
        }
        assert_eq!(placed.len(), NUM_JOINTS);
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = SkeletonSpec::for_canvas(256, 256);
        let a = sample_skeleton(&mut ChaCha8Rng::seed_from_u64(0), (256, 256), &spec).unwrap();
        let b = sample_skeleton(&mut ChaCha8Rng::seed_from_u64(0), (256, 256), &spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn frontal_right_side_is_image_left() {
        let spec = SkeletonSpec::for_canvas(128, 128).full_body_only();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let p = sample_pose(&mut rng, (128, 128), &spec).unwrap();
            assert!(p.get(JointId::R_SHOULDER).0 < p.get(JointId::L_SHOULDER).0);
            assert!(p.get(JointId::R_HIP).0 < p.get(JointId::L_HIP).0);
        }
    }

    #[test]
    fn bone_lengths_within_ranges() {
        let spec = SkeletonSpec::for_canvas(128, 128);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        // positions are snapped to a 1/64 grid: allow one grid diagonal per end
        let tol = 2.0 * std::f64::consts::SQRT_2 / 64.0;
        for _ in 0..1000 {
            let p = sample_pose(&mut rng, (128, 128), &spec).unwrap();
            for b in &spec.bones {
                let (ax, ay) = p.get(b.parent);
                let (bx, by) = p.get(b.child);
                let len = (bx - ax).hypot(by - ay);
                assert!(len >= b.length.0 - tol && len <= b.length.1 + tol, "{len} {b:?}");
            }
        }
    }

    #[test]
    fn lower_half_crop_loses_the_head() {
        let spec = SkeletonSpec::for_canvas(256, 256).full_body_only();
        let pose = sample_pose(&mut ChaCha8Rng::seed_from_u64(0), (256, 256), &spec).unwrap();
        let cropped = pose.translated(0.0, -128.0).annotate(128, 256);
        assert!(!cropped.get(JointId::HEAD_TOP).is_present());
        assert!(!cropped.get(JointId::UPPER_NECK).is_present());
        let tags = crate::factors::derive_factors(&cropped);
        assert!(tags.contains(&jpp_core::ChallengeFactor::HeadMissing));
    }

    #[test]
    fn impossible_canvas_fails_after_retries() {
        let mut spec = SkeletonSpec::for_canvas(64, 64);
        spec.anchors = vec![Anchor { weight: 1.0, x: (5.0, 6.0), y: (5.0, 6.0) }];
        spec.max_retries = 3;
        let r = sample_skeleton(&mut ChaCha8Rng::seed_from_u64(0), (64, 64), &spec);
        assert!(matches!(r, Err(SynthError::GenerationFailed { retries: 3 })));
    }
}
