//! Finite-difference check of the training gradients.

use jpp_core::{Joint, JointSet, LabelMap, RgbImage, NUM_CLASSES};
use jpp_net::{JppNet, ModelKind, NetConfig, ParamId, Preset};
use jpp_synth::SampleRecord;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::TrainConfig;
use crate::error::TrainError;
use crate::losses::{total_loss, LossMode, Targets};
use crate::targets::{gt_labels_at, gt_pose_heatmaps};
use crate::trainer::sample_gradients;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheck {
    pub checked: usize,
    pub max_rel_error: f64,
    /// Parameter name and index of the worst entry.
    pub worst: (String, usize),
    pub loss: f64,
    /// Structure weight used in ss mode.
    pub l_joint: Option<f64>,
    /// Largest analytic gradient magnitude among the checked entries.
    pub max_grad: f64,
}

/// Relative error with a floor so entries that are zero up to rounding do
/// not dominate.
pub fn rel_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Random image, labels and joints on an `h x w` canvas.
pub fn random_sample(h: usize, w: usize, seed: u64) -> SampleRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let image = RgbImage::from_raw(h, w, (0..h * w * 3).map(|_| rng.random()).collect()).expect("sized");
    let labels = LabelMap::from_raw(h, w, (0..h * w).map(|_| rng.random_range(0..NUM_CLASSES as u8)).collect())
        .expect("in range");
    let mut joints = JointSet::absent();
    for j in joints.0.iter_mut() {
        if rng.random_bool(0.8) {
            *j = Joint::visible(rng.random_range(0.0..w as f64 - 1.0), rng.random_range(0.0..h as f64 - 1.0));
        }
    }
    SampleRecord {
        id: format!("probe-{seed}"),
        image,
        labels,
        joints,
        factors: vec![],
    }
}

fn objective(net: &JppNet, s: &SampleRecord, cfg: &TrainConfig, mode: LossMode, l_joint: Option<f64>) -> Result<f64, TrainError> {
    let out = net.forward(&jpp_net::image_to_planes(&s.image))?;
    let (_, oh, ow) = out[0].parsing_scores.shape();
    let targets = Targets {
        labels: gt_labels_at(&s.labels, oh, ow),
        heatmaps: (mode == LossMode::Joint && net.config.kind == ModelKind::Joint)
            .then(|| gt_pose_heatmaps(&s.joints, oh, ow, net.config.output_stride as f64, cfg.heatmap_sigma)),
    };
    let (b, _) = total_loss(&out, &targets, cfg, mode)?;
    Ok(match (mode, l_joint) {
        // the structure weight is a constant of the step
        (LossMode::Ss, Some(lj)) => lj * b.structure.expect("ss terms").l_parsing,
        _ => b.total,
    })
}

/// Compares analytic gradients with central differences (step `eps`) on
/// `n` randomly chosen weights of a model built from `net_cfg`.
pub fn check_gradients(
    net_cfg: NetConfig,
    mode: LossMode,
    n: usize,
    seed: u64,
    eps: f64,
) -> Result<GradCheck, TrainError> {
    let mut net = JppNet::new(net_cfg, seed)?;
    // nudge every bias off zero so no unit sits exactly on a ReLU kink
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37);
    for p in net.params.iter_mut() {
        if p.name.ends_with(".bias") {
            p.data.iter_mut().for_each(|v| *v = rng.random_range(-0.1..0.1));
        }
    }
    let cfg = TrainConfig {
        stages: net.config.stages,
        parsing_weights: (0..=net.config.stages).map(|s| 0.5 + s as f64 * 0.25).collect(),
        pose_weights: (0..=net.config.stages).map(|s| 1.5 - s as f64 * 0.25).collect(),
        ..TrainConfig::default()
    };
    let s = random_sample(net.config.input_height, net.config.input_width, seed);
    let with_pose = mode == LossMode::Joint && net.config.kind == ModelKind::Joint;
    let (grads, b) = sample_gradients(&net, &s, &cfg, mode, with_pose)?;
    let l_joint = b.structure.map(|t| t.l_joint);
    let mut picks: Vec<(ParamId, usize)> = Vec::with_capacity(n);
    let sizes: Vec<usize> = net.params.iter().map(|p| p.data.len()).collect();
    let total: usize = sizes.iter().sum();
    for _ in 0..n {
        let mut k = rng.random_range(0..total);
        let mut id = 0;
        while k >= sizes[id] {
            k -= sizes[id];
            id += 1;
        }
        picks.push((id, k));
    }
    let mut out = GradCheck {
        checked: 0,
        max_rel_error: 0.0,
        worst: (String::new(), 0),
        loss: b.total,
        l_joint,
        max_grad: 0.0,
    };
    for (id, k) in picks {
        let orig = net.params.get(id).data[k];
        net.params.get_mut(id).data[k] = orig + eps;
        let up = objective(&net, &s, &cfg, mode, l_joint)?;
        net.params.get_mut(id).data[k] = orig - eps;
        let down = objective(&net, &s, &cfg, mode, l_joint)?;
        net.params.get_mut(id).data[k] = orig;
        let fd = (up - down) / (2.0 * eps);
        let an = grads.get(id).map_or(0.0, |g| g[k]);
        let e = rel_error(an, fd);
        out.checked += 1;
        out.max_grad = out.max_grad.max(an.abs());
        if e > out.max_rel_error {
            out.max_rel_error = e;
            out.worst = (net.params.get(id).name.clone(), k);
        }
    }
    Ok(out)
}

/// The tiny preset at `side x side`.
pub fn tiny_config(side: usize, kind: ModelKind) -> NetConfig {
    let mut c = NetConfig::for_preset(Preset::Tiny);
    c.input_height = side;
    c.input_width = side;
    match kind {
        ModelKind::Joint => c,
        ModelKind::ParsingOnly => c.parsing_only(),
    }
}

