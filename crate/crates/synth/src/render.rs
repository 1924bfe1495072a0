//! Capsule rasteriser for sampled poses.
//!
//! Every body segment is a capsule (a thick line segment) painted with its
//! part label in a fixed draw order; later parts occlude earlier ones. The
//! image is composed from the finished label map, so label and pixel colour
//! always agree.

use jpp_core::{JointId, JointSet, LabelMap, PartLabel, RgbImage, Visibility, NUM_CLASSES};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::skeleton::Pose;

/// Sizes and sampling probabilities of the rendered person.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderStyle {
    pub torso_radius: f64,
    pub arm_radius: f64,
    pub thigh_radius: f64,
    pub shin_radius: f64,
    pub shoe_radius: f64,
    pub glove_radius: f64,
    pub scarf_radius: f64,
    pub p_hat: f64,
    pub p_sunglasses: f64,
    pub p_gloves: f64,
    pub p_socks: f64,
    pub p_scarf: f64,
    pub p_coat: f64,
    pub p_one_piece: f64,
    pub p_skirt: f64,
    pub p_back_view: f64,
    pub p_occlusion: f64,
    pub occluder_count: (usize, usize),
    /// Occluder side length range as a fraction of the canvas.
    pub occluder_size: (f64, f64),
    pub pixel_noise: u8,
}

impl RenderStyle {
    pub fn for_canvas(height: usize, width: usize) -> Self {
        let s = height.min(width) as f64;
        Self {
            torso_radius: 0.085 * s,
            arm_radius: 0.036 * s,
            thigh_radius: 0.05 * s,
            shin_radius: 0.043 * s,
            shoe_radius: 0.045 * s,
            glove_radius: 0.03 * s,
            scarf_radius: 0.04 * s,
            p_hat: 0.3,
            p_sunglasses: 0.12,
            p_gloves: 0.1,
            p_socks: 0.12,
            p_scarf: 0.1,
            p_coat: 0.3,
            p_one_piece: 0.25,
            p_skirt: 0.35,
            p_back_view: 0.15,
            p_occlusion: 0.2,
            occluder_count: (1, 2),
            occluder_size: (0.12, 0.25),
            pixel_noise: 6,
        }
    }

    /// Disables every random event that changes the set of classes or tags.
    pub fn plain(mut self) -> Self {
        self.p_hat = 0.0;
        self.p_sunglasses = 0.0;
        self.p_gloves = 0.0;
        self.p_socks = 0.0;
        self.p_scarf = 0.0;
        self.p_one_piece = 0.0;
        self.p_back_view = 0.0;
        self.p_occlusion = 0.0;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TorsoGarment {
    UpperClothes,
    Coat,
    Dress,
    Jumpsuit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LowerGarment {
    Pants,
    Skirt,
}

/// Sampled look of one person.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Appearance {
    pub torso: TorsoGarment,
    pub lower: LowerGarment,
    pub hat: bool,
    pub sunglasses: bool,
    pub gloves: bool,
    pub socks: bool,
    pub scarf: bool,
    /// Person seen from behind: the face is hidden and side shading follows
    /// the image, not the person.
    pub back_view: bool,
    pub colors: [[u8; 3]; NUM_CLASSES],
    pub background: [[u8; 3]; 2],
    pub texture_seed: u64,
}

impl Appearance {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, style: &RenderStyle) -> Self {
        let color = |rng: &mut R| -> [u8; 3] {
            [rng.random_range(30..=230), rng.random_range(30..=230), rng.random_range(30..=230)]
        };
        let mut colors = [[0u8; 3]; NUM_CLASSES];
        for c in colors.iter_mut() {
            *c = color(rng);
        }
        let skin_base: [f64; 3] = [
            rng.random_range(150.0..235.0),
            rng.random_range(110.0..190.0),
            rng.random_range(80.0..160.0),
        ];
        // fixed side shading: the person's left is darker
        let shade = |k: f64| skin_base.map(|v| (v * k).round().clamp(0.0, 255.0) as u8);
        colors[PartLabel::FACE.index()] = shade(1.0);
        colors[PartLabel::RIGHT_ARM.index()] = shade(1.0);
        colors[PartLabel::LEFT_ARM.index()] = shade(0.8);
        colors[PartLabel::RIGHT_LEG.index()] = shade(0.95);
        colors[PartLabel::LEFT_LEG.index()] = shade(0.75);
        let shoe = color(rng);
        colors[PartLabel::RIGHT_SHOE.index()] = shoe;
        colors[PartLabel::LEFT_SHOE.index()] = shoe.map(|v| (v as f64 * 0.7) as u8);

        let one_piece = rng.random_bool(style.p_one_piece);
        let torso = if one_piece {
            if rng.random_bool(0.5) {
                TorsoGarment::Dress
            } else {
                TorsoGarment::Jumpsuit
            }
        } else if rng.random_bool(style.p_coat) {
            TorsoGarment::Coat
        } else {
            TorsoGarment::UpperClothes
        };
        let lower = if rng.random_bool(style.p_skirt) {
            LowerGarment::Skirt
        } else {
            LowerGarment::Pants
        };
        let hat = rng.random_bool(style.p_hat);
        let sunglasses = rng.random_bool(style.p_sunglasses);
        let gloves = rng.random_bool(style.p_gloves);
        let socks = rng.random_bool(style.p_socks);
        let scarf = rng.random_bool(style.p_scarf);
        let back_view = rng.random_bool(style.p_back_view);
        if back_view {
            for (l, r) in [
                (PartLabel::LEFT_ARM, PartLabel::RIGHT_ARM),
                (PartLabel::LEFT_LEG, PartLabel::RIGHT_LEG),
                (PartLabel::LEFT_SHOE, PartLabel::RIGHT_SHOE),
            ] {
                colors.swap(l.index(), r.index());
            }
        }
        let background = [color(rng), color(rng)];
        Self {
            torso,
            lower,
            hat,
            sunglasses,
            gloves,
            socks,
            scarf,
            back_view,
            colors,
            background,
            texture_seed: rng.random(),
        }
    }
}

/// Axis-aligned rectangle painted over the person.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Occluder {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub color: [u8; 3],
}

impl Occluder {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }
}

/// Occluders centred on randomly chosen on-canvas joints.
pub fn sample_occluders<R: Rng + ?Sized>(
    rng: &mut R,
    joints: &JointSet,
    (height, width): (usize, usize),
    style: &RenderStyle,
) -> Vec<Occluder> {
    let present: Vec<_> = joints.iter().filter(|(_, j)| j.is_present()).map(|(_, j)| *j).collect();
    if present.is_empty() || !rng.random_bool(style.p_occlusion) {
        return Vec::new();
    }
    let s = height.min(width) as f64;
    let (lo, hi) = style.occluder_count;
    let n = rng.random_range(lo..=hi.max(lo));
    (0..n)
        .map(|_| {
            let j = present[rng.random_range(0..present.len())];
            let w = rng.random_range(style.occluder_size.0..=style.occluder_size.1) * s;
            let h = rng.random_range(style.occluder_size.0..=style.occluder_size.1) * s;
            // the anchor joint always stays inside the rectangle
            let cx = j.x + rng.random_range(-0.3..0.3) * w;
            let cy = j.y + rng.random_range(-0.3..0.3) * h;
            Occluder {
                x0: cx - w / 2.0,
                y0: cy - h / 2.0,
                x1: cx + w / 2.0,
                y1: cy + h / 2.0,
                color: [
                    rng.random_range(0..=255),
                    rng.random_range(0..=255),
                    rng.random_range(0..=255),
                ],
            }
        })
        .collect()
}

/// Present joints under an occluder become occluded-but-annotated.
pub fn apply_occlusion(joints: &JointSet, occluders: &[Occluder]) -> JointSet {
    let mut out = *joints;
    for j in out.0.iter_mut() {
        if j.is_present() && occluders.iter().any(|o| o.contains(j.x, j.y)) {
            j.vis = Visibility::Occluded;
        }
    }
    out
}

struct Canvas {
    labels: LabelMap,
}

impl Canvas {
    fn capsule(&mut self, a: (f64, f64), b: (f64, f64), r: f64, label: PartLabel) {
        self.capsule_where(a, b, r, label, |_, _| true);
    }

    fn capsule_where(
        &mut self,
        a: (f64, f64),
        b: (f64, f64),
        r: f64,
        label: PartLabel,
        keep: impl Fn(f64, f64) -> bool,
    ) {
        let (h, w) = (self.labels.height() as f64, self.labels.width() as f64);
        let x0 = (a.0.min(b.0) - r).floor().max(0.0);
        let x1 = (a.0.max(b.0) + r).ceil().min(w - 1.0);
        let y0 = (a.1.min(b.1) - r).floor().max(0.0);
        let y1 = (a.1.max(b.1) + r).ceil().min(h - 1.0);
        if x0 > x1 || y0 > y1 {
            return;
        }
        let (dx, dy) = (b.0 - a.0, b.1 - a.1);
        let len2 = dx * dx + dy * dy;
        let r2 = r * r;
        for y in y0 as usize..=y1 as usize {
            for x in x0 as usize..=x1 as usize {
                let (px, py) = (x as f64, y as f64);
                let t = if len2 > 0.0 {
                    (((px - a.0) * dx + (py - a.1) * dy) / len2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let (qx, qy) = (a.0 + t * dx - px, a.1 + t * dy - py);
                if qx * qx + qy * qy <= r2 && keep(px, py) {
                    self.labels.set(y, x, label);
                }
            }
        }
    }
}

fn lerp(a: (f64, f64), b: (f64, f64), t: f64) -> (f64, f64) {
    (a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t)
}

fn along(a: (f64, f64), b: (f64, f64), dist: f64) -> (f64, f64) {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let n = dx.hypot(dy).max(1e-9);
    (b.0 + dx / n * dist, b.1 + dy / n * dist)
}

/// Label map of a posed person with the given look. Occluders overwrite the
/// person with background.
pub fn rasterize_labels(
    pose: &Pose,
    look: &Appearance,
    style: &RenderStyle,
    occluders: &[Occluder],
    (height, width): (usize, usize),
) -> LabelMap {
    let mut cv = Canvas {
        labels: LabelMap::new(height, width, PartLabel::BACKGROUND),
    };
    let p = |id: JointId| pose.get(id);
    let (pelvis, thorax) = (p(JointId::PELVIS), p(JointId::THORAX));
    let (neck, top) = (p(JointId::UPPER_NECK), p(JointId::HEAD_TOP));
    let shoulders = [p(JointId::R_SHOULDER), p(JointId::L_SHOULDER)];
    let elbows = [p(JointId::R_ELBOW), p(JointId::L_ELBOW)];
    let wrists = [p(JointId::R_WRIST), p(JointId::L_WRIST)];
    let hips = [p(JointId::R_HIP), p(JointId::L_HIP)];
    let knees = [p(JointId::R_KNEE), p(JointId::L_KNEE)];
    let ankles = [p(JointId::R_ANKLE), p(JointId::L_ANKLE)];
    let arm_labels = [PartLabel::RIGHT_ARM, PartLabel::LEFT_ARM];
    let leg_labels = [PartLabel::RIGHT_LEG, PartLabel::LEFT_LEG];
    let shoe_labels = [PartLabel::RIGHT_SHOE, PartLabel::LEFT_SHOE];

    let torso_label = match look.torso {
        TorsoGarment::UpperClothes => PartLabel::UPPER_CLOTHES,
        TorsoGarment::Coat => PartLabel::COAT,
        TorsoGarment::Dress => PartLabel::DRESS,
        TorsoGarment::Jumpsuit => PartLabel::JUMPSUIT,
    };
    cv.capsule(pelvis, thorax, style.torso_radius, torso_label);
    cv.capsule(shoulders[0], shoulders[1], style.arm_radius * 1.2, torso_label);
    cv.capsule(hips[0], hips[1], style.thigh_radius, torso_label);

    match (look.torso, look.lower) {
        (TorsoGarment::Dress, _) | (TorsoGarment::UpperClothes | TorsoGarment::Coat, LowerGarment::Skirt) => {
            let label = if look.torso == TorsoGarment::Dress {
                PartLabel::DRESS
            } else {
                PartLabel::SKIRT
            };
            let hem = lerp(knees[0], knees[1], 0.5);
            let r = style.thigh_radius * 1.3;
            cv.capsule(pelvis, lerp(pelvis, hem, 0.85), r, label);
            for s in 0..2 {
                cv.capsule(hips[s], lerp(hips[s], knees[s], 0.85), r, label);
            }
        }
        (TorsoGarment::Jumpsuit, _) => {
            for s in 0..2 {
                cv.capsule(hips[s], knees[s], style.thigh_radius, PartLabel::JUMPSUIT);
            }
        }
        _ => {
            for s in 0..2 {
                cv.capsule(hips[s], knees[s], style.thigh_radius, PartLabel::PANTS);
            }
        }
    }

    for s in 0..2 {
        cv.capsule(knees[s], ankles[s], style.shin_radius, leg_labels[s]);
    }
    let down = |a: (f64, f64), d: f64| (a.0, a.1 + d);
    if look.socks {
        for s in 0..2 {
            cv.capsule(
                down(ankles[s], 0.3 * style.shin_radius),
                down(ankles[s], 0.9 * style.shin_radius),
                style.shin_radius * 0.95,
                PartLabel::SOCKS,
            );
        }
    }
    for s in 0..2 {
        let c = down(ankles[s], 1.2 * style.shin_radius);
        cv.capsule(c, c, style.shoe_radius, shoe_labels[s]);
    }

    for s in 0..2 {
        cv.capsule(shoulders[s], elbows[s], style.arm_radius, arm_labels[s]);
        cv.capsule(elbows[s], wrists[s], style.arm_radius, arm_labels[s]);
    }
    if look.gloves {
        for s in 0..2 {
            let c = along(elbows[s], wrists[s], style.arm_radius + 0.5 * style.glove_radius);
            cv.capsule(c, c, style.glove_radius, PartLabel::GLOVES);
        }
    }
    if look.scarf {
        cv.capsule(lerp(thorax, neck, 0.2), neck, style.scarf_radius, PartLabel::SCARF);
    }

    // head: bands along the neck -> top axis
    let axis = (top.0 - neck.0, top.1 - neck.1);
    let len = axis.0.hypot(axis.1).max(1e-9);
    let u = (axis.0 / len, axis.1 / len);
    let centre = lerp(neck, top, 0.5);
    let r = 0.55 * len;
    let proj = move |x: f64, y: f64| ((x - neck.0) * u.0 + (y - neck.1) * u.1) / len;
    let perp = move |x: f64, y: f64| ((x - centre.0) * -u.1 + (y - centre.1) * u.0).abs();
    let base = if look.back_view {
        PartLabel::HAIR
    } else {
        PartLabel::FACE
    };
    cv.capsule(centre, centre, r, base);
    if !look.back_view {
        cv.capsule_where(centre, centre, r, PartLabel::HAIR, |x, y| proj(x, y) > 0.68);
    }
    if look.hat {
        cv.capsule_where(centre, centre, r * 1.05, PartLabel::HAT, |x, y| proj(x, y) > 0.8);
    }
    if look.sunglasses && !look.back_view {
        cv.capsule_where(centre, centre, r, PartLabel::SUNGLASSES, |x, y| {
            let t = proj(x, y);
            t > 0.45 && t < 0.56 && perp(x, y) < 0.8 * r
        });
    }

    for o in occluders {
        for y in 0..height {
            for x in 0..width {
                if o.contains(x as f64, y as f64) {
                    cv.labels.set(y, x, PartLabel::BACKGROUND);
                }
            }
        }
    }
    cv.labels
}

/// Colour image matching `labels`: textured background, flat part colours
/// with per-pixel noise, solid occluders.
pub fn compose_image(labels: &LabelMap, look: &Appearance, occluders: &[Occluder], noise: u8) -> RgbImage {
    let (h, w) = (labels.height(), labels.width());
    let mut rng = ChaCha8Rng::seed_from_u64(look.texture_seed);
    let fx: f64 = rng.random_range(0.02..0.15);
    let fy: f64 = rng.random_range(0.02..0.15);
    let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let mut img = RgbImage::new(h, w, [0; 3]);
    for y in 0..h {
        for x in 0..w {
            let base = if let Some(o) = occluders.iter().rev().find(|o| o.contains(x as f64, y as f64)) {
                o.color
            } else {
                let l = labels.get(y, x);
                if l == PartLabel::BACKGROUND {
                    let t = 0.5 + 0.5 * (x as f64 * fx + y as f64 * fy + phase).sin();
                    let [a, b] = look.background;
                    [0, 1, 2].map(|k| (a[k] as f64 * (1.0 - t) + b[k] as f64 * t) as u8)
                } else {
                    look.colors[l.index()]
                }
            };
            let px = if noise > 0 {
                base.map(|v| {
                    let n: i16 = rng.random_range(-(noise as i16)..=noise as i16);
                    (v as i16 + n).clamp(0, 255) as u8
                })
            } else {
                base
            };
            img.set(y, x, px);
        }
    }
    img
}

/// Convenience wrapper producing both outputs.
pub fn rasterize_person(
    pose: &Pose,
    look: &Appearance,
    style: &RenderStyle,
    occluders: &[Occluder],
    canvas: (usize, usize),
) -> (RgbImage, LabelMap) {
    let labels = rasterize_labels(pose, look, style, occluders, canvas);
    let image = compose_image(&labels, look, occluders, style.pixel_noise);
    (image, labels)
}
