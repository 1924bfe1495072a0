use jpp_net::{ModelKind, NetConfig, Preset};
use serde::{Deserialize, Serialize};

use crate::error::TrainError;

/// Every training knob; read from a flat TOML table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub preset: Preset,
    pub seed: u64,
    /// Square crop fed to the network; must be a multiple of the stride.
    pub input_size: usize,
    pub output_stride: usize,
    /// Refinement stages of the joint model.
    pub stages: usize,
    pub msc: bool,
    pub norm_groups: usize,
    /// Phase A: parsing-only pre-training.
    pub epochs_parsing: usize,
    /// Phase B: joint training of the full stage stack.
    pub epochs_joint: usize,
    /// Structure-sensitive fine-tuning after phase A.
    pub epochs_ss: usize,
    pub batch_size: usize,
    pub base_lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Exponent of the polynomial decay `(1 - t/T)^power`.
    pub lr_power: f64,
    /// Global gradient-norm cap; 0 disables.
    pub grad_clip: f64,
    pub scale_min: f64,
    pub scale_max: f64,
    pub flip_prob: f64,
    /// Per-stage parsing loss weights (stage 0 first); empty means all 1.
    pub parsing_weights: Vec<f64>,
    /// Per-stage pose loss weights; empty means all 1.
    pub pose_weights: Vec<f64>,
    /// Std of target heatmaps, in output-map cells.
    pub heatmap_sigma: f64,
    /// Std of pseudo-joint heatmaps in the structure loss, in output-map cells.
    pub structure_sigma: f64,
    pub train_split: String,
    /// Use only the first N samples of the split; 0 uses all.
    pub max_samples: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            preset: Preset::Toy,
            seed: 0,
            input_size: 128,
            output_stride: 8,
            stages: 2,
            msc: false,
            norm_groups: 0,
            epochs_parsing: 30,
            epochs_joint: 30,
            epochs_ss: 20,
            batch_size: 4,
            base_lr: 0.01,
            momentum: 0.9,
            weight_decay: 5e-4,
            lr_power: 0.9,
            grad_clip: 10.0,
            scale_min: 0.75,
            scale_max: 1.25,
            flip_prob: 0.5,
            parsing_weights: vec![],
            pose_weights: vec![],
            heatmap_sigma: 1.0,
            structure_sigma: 1.0,
            train_split: "train".into(),
            max_samples: 0,
        }
    }
}

impl TrainConfig {
    pub fn from_toml(text: &str) -> Result<Self, TrainError> {
        let cfg: Self = toml::from_str(text).map_err(|e| TrainError::Config {
            key: toml_error_key(&e, text),
            reason: e.message().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config serialises")
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let err = |key: &str, reason: &str| {
            Err(TrainError::Config {
                key: key.into(),
                reason: reason.into(),
            })
        };
        if self.input_size == 0 || self.input_size % self.output_stride != 0 {
            return err("input_size", "must be a positive multiple of output_stride");
        }
        if self.batch_size == 0 {
            return err("batch_size", "must be positive");
        }
        if !(self.base_lr > 0.0 && self.base_lr.is_finite()) {
            return err("base_lr", "must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return err("momentum", "must lie in [0, 1)");
        }
        if !(self.weight_decay >= 0.0) {
            return err("weight_decay", "must be non-negative");
        }
        if !(self.lr_power >= 0.0) {
            return err("lr_power", "must be non-negative");
        }
        if !(self.grad_clip >= 0.0) {
            return err("grad_clip", "must be non-negative");
        }
        if !(self.scale_min > 0.0 && self.scale_min <= self.scale_max && self.scale_max.is_finite()) {
            return err("scale_min", "need 0 < scale_min <= scale_max");
        }
        if !(0.0..=1.0).contains(&self.flip_prob) {
            return err("flip_prob", "must lie in [0, 1]");
        }
        for (key, w) in [("parsing_weights", &self.parsing_weights), ("pose_weights", &self.pose_weights)] {
            if w.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return err(key, "weights must be non-negative");
            }
            if !w.is_empty() && w.len() != self.stages + 1 {
                return err(key, "need one weight per stage (stages + 1)");
            }
        }
        if !(self.heatmap_sigma > 0.0) {
            return err("heatmap_sigma", "must be positive");
        }
        if !(self.structure_sigma > 0.0) {
            return err("structure_sigma", "must be positive");
        }
        self.net_config(ModelKind::Joint).validate().map_err(|e| TrainError::Config {
            key: "preset".into(),
            reason: e.to_string(),
        })
    }

    pub fn net_config(&self, kind: ModelKind) -> NetConfig {
        let mut c = NetConfig::for_preset(self.preset);
        c.input_height = self.input_size;
        c.input_width = self.input_size;
        c.output_stride = self.output_stride;
        c.stages = self.stages;
        c.msc = self.msc;
        c.norm_groups = self.norm_groups;
        match kind {
            ModelKind::Joint => c,
            ModelKind::ParsingOnly => c.parsing_only(),
        }
    }

    pub fn parsing_weight(&self, stage: usize) -> f64 {
        self.parsing_weights.get(stage).copied().unwrap_or(1.0)
    }

    pub fn pose_weight(&self, stage: usize) -> f64 {
        self.pose_weights.get(stage).copied().unwrap_or(1.0)
    }
}

fn toml_error_key(e: &toml::de::Error, text: &str) -> String {
    // unknown fields are named in backticks; other errors point at a line
    let msg = e.message();
    if msg.starts_with("unknown field") {
        if let Some(k) = msg.split('`').nth(1) {
            return k.to_string();
        }
    }
    e.span()
        .and_then(|s| {
            let start = text[..s.start].rfind('\n').map_or(0, |i| i + 1);
            let line = text[start..].lines().next()?;
            let key = line.split('=').next()?.trim();
            (!key.is_empty()).then(|| key.to_string())
        })
        .unwrap_or_else(|| "<file>".into())
}
