//! Random scale, crop and mirror applied consistently to image, labels and
//! joints.

use jpp_core::{PartLabel, RgbImage};
use jpp_synth::SampleRecord;
use rand::Rng;

use crate::config::TrainConfig;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AugmentParams {
    pub scale: f64,
    pub flip: bool,
    /// Crop origin in the scaled (and flipped) image; negative means padding.
    pub y0: isize,
    pub x0: isize,
}

impl AugmentParams {
    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            flip: false,
            y0: 0,
            x0: 0,
        }
    }
}

fn scaled(n: usize, s: f64) -> usize {
    ((n as f64 * s).round() as usize).max(1)
}

fn crop_origin<R: Rng>(rng: &mut R, size: usize, crop: usize) -> isize {
    if size >= crop {
        rng.random_range(0..=size - crop) as isize
    } else {
        -(((crop - size) / 2) as isize)
    }
}

pub fn sample_params<R: Rng>(rng: &mut R, cfg: &TrainConfig, height: usize, width: usize) -> AugmentParams {
    let scale = if cfg.scale_max > cfg.scale_min {
        rng.random_range(cfg.scale_min..=cfg.scale_max)
    } else {
        cfg.scale_min
    };
    let flip = rng.random_bool(cfg.flip_prob);
    let (h, w) = (scaled(height, scale), scaled(width, scale));
    let y0 = crop_origin(rng, h, cfg.input_size);
    let x0 = crop_origin(rng, w, cfg.input_size);
    AugmentParams { scale, flip, y0, x0 }
}

/// Scale (bilinear image, nearest labels), mirror with left/right swap,
/// then crop to `crop x crop`, padding with background and the mean colour.
/// Joints that leave the crop become absent.
pub fn apply(s: &SampleRecord, p: &AugmentParams, crop: usize) -> SampleRecord {
    let (h, w) = (s.image.height(), s.image.width());
    let (sh, sw) = (scaled(h, p.scale), scaled(w, p.scale));
    let fill = s.image.mean_color();
    let mut image: RgbImage = s.image.resized(sh, sw);
    let mut labels = s.labels.resized(sh, sw);
    // half-pixel centres: x' + 0.5 = (x + 0.5) * f
    let (fx, fy) = (sw as f64 / w as f64, sh as f64 / h as f64);
    let mut joints = s.joints.transformed(fx, fy, 0.5 * fx - 0.5, 0.5 * fy - 0.5);
    if p.flip {
        image = image.flipped();
        labels = labels.flipped();
        joints = joints.flipped(sw);
    }
    SampleRecord {
        id: s.id.clone(),
        image: image.crop(p.y0, p.x0, crop, crop, fill),
        labels: labels.crop(p.y0, p.x0, crop, crop, PartLabel::BACKGROUND),
        joints: joints.cropped(p.y0 as f64, p.x0 as f64, crop, crop),
        factors: s.factors.clone(),
    }
}

pub fn augment<R: Rng>(s: &SampleRecord, rng: &mut R, cfg: &TrainConfig) -> SampleRecord {
    let p = sample_params(rng, cfg, s.image.height(), s.image.width());
    apply(s, &p, cfg.input_size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use jpp_core::flip_label_map;
    use jpp_synth::{generate_sample, RenderStyle, SkeletonSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample(i: usize) -> SampleRecord {
        generate_sample(
            1,
            &format!("s{i}"),
            (96, 96),
            &SkeletonSpec::for_canvas(96, 96),
            &RenderStyle::for_canvas(96, 96),
        )
        .unwrap()
    }

    #[test]
    fn identity_parameters() {
        let s = sample(0);
        assert_eq!(apply(&s, &AugmentParams::identity(), 96), s);
    }

    #[test]
    fn flip_routes_through_label_flip() {
        let s = sample(1);
        let mut p = AugmentParams::identity();
        p.scale = 1.1;
        p.y0 = 3;
        p.x0 = 5;
        let plain = apply(&s, &p, 96);
        p.flip = true;
        let flipped = apply(&s, &p, 96);
        // same crop window mirrored: compare over full scaled maps instead
        let q = AugmentParams { y0: 0, x0: 0, ..p };
        let sz = scaled(96, 1.1);
        let a = apply(&s, &AugmentParams { flip: false, ..q }, sz);
        let b = apply(&s, &q, sz);
        assert_eq!(b.labels, flip_label_map(&a.labels));
        assert_eq!(b.joints, a.joints.flipped(sz));
        assert_ne!(plain.labels, flipped.labels);
    }

    #[test]
    fn joints_stay_on_their_parts() {
        // visible wrists/ankles keep a pixel of their limb within a few pixels
        use jpp_core::JointId;
        let cfg = TrainConfig {
            input_size: 96,
            ..TrainConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pairs = [
            (JointId::R_WRIST, [PartLabel::RIGHT_ARM, PartLabel::GLOVES, PartLabel::UPPER_CLOTHES, PartLabel::COAT, PartLabel::DRESS, PartLabel::JUMPSUIT]),
            (JointId::L_WRIST, [PartLabel::LEFT_ARM, PartLabel::GLOVES, PartLabel::UPPER_CLOTHES, PartLabel::COAT, PartLabel::DRESS, PartLabel::JUMPSUIT]),
            (JointId::R_ANKLE, [PartLabel::RIGHT_LEG, PartLabel::RIGHT_SHOE, PartLabel::SOCKS, PartLabel::PANTS, PartLabel::SKIRT, PartLabel::JUMPSUIT]),
            (JointId::L_ANKLE, [PartLabel::LEFT_LEG, PartLabel::LEFT_SHOE, PartLabel::SOCKS, PartLabel::PANTS, PartLabel::SKIRT, PartLabel::JUMPSUIT]),
        ];
        let mut checked = 0;
        for i in 0..500 {
            let s = augment(&sample(i % 40), &mut rng, &cfg);
            for (id, parts) in &pairs {
                let j = s.joints.get(*id);
                if j.vis != jpp_core::Visibility::Visible {
                    continue;
                }
                let (cx, cy) = (j.x.round() as isize, j.y.round() as isize);
                let near = (-4..=4).any(|dy| {
                    (-4..=4).any(|dx| {
                        let (y, x) = (cy + dy, cx + dx);
                        y >= 0 && x >= 0 && y < 96 && x < 96 && parts.contains(&s.labels.get(y as usize, x as usize))
                    })
                });
                assert!(near, "sample {i} joint {id:?} at ({}, {})", j.x, j.y);
                checked += 1;
            }
        }
        assert!(checked > 500);
    }
}
