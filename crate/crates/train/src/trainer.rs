//! Training loops.
//!
//! Joint mode runs a parsing-only phase followed by end-to-end training of
//! the full stage stack. Ss mode runs (or reuses) the same parsing phase and
//! then fine-tunes the parsing-only network under the structure-sensitive
//! loss, loading only images and label maps.
//!
//! Each sample's augmentation is seeded from `(seed, phase, epoch, id)` and
//! per-sample gradients are reduced in batch order, so results do not depend
//! on thread scheduling and a resumed run matches an uninterrupted one.

use std::io::Write;
use std::path::{Path, PathBuf};

use jpp_core::{par, JointSet};
use jpp_net::{backward, checkpoint, forward_graph, image_to_planes, Ctx, Grads, JppNet, ModelKind, ParamStore, StageOutputs, Var};
use jpp_synth::dataset::sample_seed;
use jpp_synth::{Dataset, SampleRecord};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::augment::augment;
use crate::config::TrainConfig;
use crate::error::TrainError;
use crate::losses::{total_loss, LossBreakdown, LossMode, Targets};
use crate::optim::{clip_grad_norm, poly_lr, Sgd};
use crate::targets::{gt_labels_at, gt_pose_heatmaps};

pub const LOG_FILE: &str = "train_log.jsonl";
pub const STATE_FILE: &str = "state.ckpt";
pub const PARSING_CHECKPOINT: &str = "parsing.ckpt";
pub const MODEL_CHECKPOINT: &str = "model.ckpt";
const MOMENTUM_PREFIX: &str = "momentum/";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    /// Backbone and part module on the parsing loss.
    Parsing,
    /// Full stage stack on parsing and pose losses.
    Joint,
    /// Parsing-only network on the structure-sensitive loss.
    Ss,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Parsing => "parsing",
            Phase::Joint => "joint",
            Phase::Ss => "ss",
        }
    }

    pub fn model_kind(self) -> ModelKind {
        match self {
            Phase::Joint => ModelKind::Joint,
            _ => ModelKind::ParsingOnly,
        }
    }

    fn loss_mode(self) -> LossMode {
        match self {
            Phase::Ss => LossMode::Ss,
            _ => LossMode::Joint,
        }
    }

    pub fn epochs(self, cfg: &TrainConfig) -> usize {
        match self {
            Phase::Parsing => cfg.epochs_parsing,
            Phase::Joint => cfg.epochs_joint,
            Phase::Ss => cfg.epochs_ss,
        }
    }

    fn uses_joints(self) -> bool {
        self == Phase::Joint
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainMode {
    Joint,
    Ss,
}

impl TrainMode {
    fn phases(self) -> [Phase; 2] {
        match self {
            TrainMode::Joint => [Phase::Parsing, Phase::Joint],
            TrainMode::Ss => [Phase::Parsing, Phase::Ss],
        }
    }
}

/// One line of the loss log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub phase: Phase,
    pub epoch: usize,
    /// Global optimiser step count after this epoch.
    pub step: usize,
    pub lr: f64,
    /// Mean total loss over the epoch's samples.
    pub loss: f64,
    pub parsing: Vec<f64>,
    pub pose: Vec<f64>,
    /// Mean joint structure loss (ss phase only).
    pub l_joint: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub net: JppNet,
    pub records: Vec<EpochRecord>,
    pub checkpoint: PathBuf,
}

/// Options beyond the config itself.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Continue from `state.ckpt` in the output directory.
    pub resume: bool,
    /// Ss mode: start fine-tuning from these parsing weights instead of
    /// running the parsing phase.
    pub init: Option<JppNet>,
    /// Stop after this many optimiser steps in total (for tests).
    pub max_steps: Option<usize>,
}

pub fn train_jppnet(cfg: &TrainConfig, data: &Dataset, out: &Path, opts: RunOptions) -> Result<TrainOutcome, TrainError> {
    Trainer::new(cfg, data, out)?.run(TrainMode::Joint, opts)
}

pub fn train_ssjppnet(cfg: &TrainConfig, data: &Dataset, out: &Path, opts: RunOptions) -> Result<TrainOutcome, TrainError> {
    Trainer::new(cfg, data, out)?.run(TrainMode::Ss, opts)
}

/// Saves weights with the architecture and training config in the header.
pub fn save_model(path: &Path, net: &JppNet, cfg: &TrainConfig, extra: Value) -> Result<(), TrainError> {
    let meta = json!({
        "net_config": net.config,
        "train_config": cfg,
        "info": extra,
    });
    Ok(checkpoint::save(path, &net.params, &meta)?)
}

pub fn load_model(path: &Path) -> Result<JppNet, TrainError> {
    let (params, meta) = checkpoint::load(path)?;
    let config = serde_json::from_value(meta["net_config"].clone())
        .map_err(|e| TrainError::Resume(format!("{}: net_config: {e}", path.display())))?;
    Ok(JppNet::from_parts(config, params)?)
}

pub fn read_log(path: &Path) -> Result<Vec<EpochRecord>, TrainError> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(vec![]),
        Err(e) => return Err(TrainError::io(path, e)),
    };
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| TrainError::Resume(format!("{}: {e}", path.display()))))
        .collect()
}

/// Forward and backward for one prepared sample; returns parameter
/// gradients and the loss breakdown.
pub fn sample_gradients(
    net: &JppNet,
    sample: &SampleRecord,
    cfg: &TrainConfig,
    mode: LossMode,
    with_pose: bool,
) -> Result<(Grads, LossBreakdown), TrainError> {
    let ctx = Ctx::train(&net.params);
    let input = Var::leaf(image_to_planes(&sample.image));
    let stages = forward_graph(&ctx, &net.config, &input)?;
    let outputs: Vec<StageOutputs> = stages.iter().map(StageOutputs::from).collect();
    let (_, oh, ow) = outputs[0].parsing_scores.shape();
    let targets = Targets {
        labels: gt_labels_at(&sample.labels, oh, ow),
        heatmaps: with_pose.then(|| {
            gt_pose_heatmaps(&sample.joints, oh, ow, net.config.output_stride as f64, cfg.heatmap_sigma)
        }),
    };
    let (breakdown, seeds) = total_loss(&outputs, &targets, cfg, mode)?;
    let mut roots = Vec::new();
    for (sv, (gp, gq)) in stages.iter().zip(seeds) {
        roots.push((sv.parsing.clone(), gp));
        if let (Some(v), Some(g)) = (&sv.pose, gq) {
            roots.push((v.clone(), g));
        }
    }
    Ok((backward(roots, &net.params), breakdown))
}

struct Trainer<'a> {
    cfg: &'a TrainConfig,
    data: &'a Dataset,
    out: PathBuf,
    ids: Vec<String>,
}

struct ResumePoint {
    phase: Phase,
    /// Epochs of `phase` already completed.
    epoch: usize,
    step: usize,
    net: JppNet,
    opt: Sgd,
}

impl<'a> Trainer<'a> {
    fn new(cfg: &'a TrainConfig, data: &'a Dataset, out: &Path) -> Result<Self, TrainError> {
        cfg.validate()?;
        let mut ids = data.ids(&cfg.train_split)?.to_vec();
        if cfg.max_samples > 0 {
            ids.truncate(cfg.max_samples);
        }
        if ids.is_empty() {
            return Err(TrainError::Config {
                key: "train_split".into(),
                reason: format!("split {} has no samples", cfg.train_split),
            });
        }
        std::fs::create_dir_all(out).map_err(|e| TrainError::io(out, e))?;
        Ok(Self {
            cfg,
            data,
            out: out.to_path_buf(),
            ids,
        })
    }

    fn steps_per_epoch(&self) -> usize {
        self.ids.len().div_ceil(self.cfg.batch_size)
    }

    fn run(&self, mode: TrainMode, opts: RunOptions) -> Result<TrainOutcome, TrainError> {
        let log_path = self.out.join(LOG_FILE);
        let [first, second] = mode.phases();
        let mut records;
        let mut step;
        let mut current: Option<(Phase, usize, JppNet, Sgd)>;
        if opts.resume {
            let r = self.load_state(mode)?;
            records = read_log(&log_path)?;
            records.retain(|rec| rec.step <= r.step);
            self.rewrite_log(&records)?;
            step = r.step;
            current = Some((r.phase, r.epoch, r.net, r.opt));
        } else {
            records = vec![];
            step = 0;
            self.rewrite_log(&records)?;
            current = None;
        }
        let skip_first = mode == TrainMode::Ss && opts.init.is_some();

        // phase A
        let parsing_net = match &current {
            Some((p, ..)) if *p == second => None,
            _ if skip_first => {
                let net = opts.init.clone().expect("checked");
                if net.config.kind != ModelKind::ParsingOnly {
                    return Err(TrainError::Config {
                        key: "init".into(),
                        reason: "ss fine-tuning needs a parsing-only checkpoint".into(),
                    });
                }
                Some(net)
            }
            _ => {
                let (epoch, mut net, mut opt) = match current.take() {
                    Some((_, e, n, o)) => (e, n, o),
                    None => {
                        let net = JppNet::new(self.cfg.net_config(first.model_kind()), self.cfg.seed)?;
                        let opt = Sgd::new(&net.params, self.cfg.momentum, self.cfg.weight_decay);
                        (0, net, opt)
                    }
                };
                self.run_phase(first, &mut net, &mut opt, epoch, &mut step, &mut records, opts.max_steps)?;
                save_model(&self.out.join(PARSING_CHECKPOINT), &net, self.cfg, json!({"phase": first}))?;
                Some(net)
            }
        };

        // phase B
        let (epoch, mut net, mut opt) = match (current, parsing_net) {
            (Some((_, e, n, o)), _) => (e, n, o),
            (None, Some(pnet)) => {
                let net = if second.model_kind() == ModelKind::Joint {
                    let mut n = JppNet::new(self.cfg.net_config(ModelKind::Joint), self.cfg.seed)?;
                    n.params.copy_matching_from(&pnet.params);
                    n
                } else {
                    pnet
                };
                let opt = Sgd::new(&net.params, self.cfg.momentum, self.cfg.weight_decay);
                (0, net, opt)
            }
            (None, None) => unreachable!("either resumed in phase B or ran phase A"),
        };
        self.run_phase(second, &mut net, &mut opt, epoch, &mut step, &mut records, opts.max_steps)?;
        let checkpoint = self.out.join(MODEL_CHECKPOINT);
        save_model(&checkpoint, &net, self.cfg, json!({"phase": second, "step": step}))?;
        Ok(TrainOutcome {
            net,
            records,
            checkpoint,
        })
    }

    fn rng_for(&self, phase: Phase, epoch: usize, key: &str) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(sample_seed(self.cfg.seed, &format!("{}/{epoch}/{key}", phase.name())))
    }

    fn load(&self, phase: Phase, id: &str) -> Result<SampleRecord, TrainError> {
        if phase.uses_joints() {
            return Ok(self.data.load_sample(id)?);
        }
        let (image, labels) = self.data.load_parsing_sample(id)?;
        Ok(SampleRecord {
            id: id.to_string(),
            image,
            labels,
            joints: JointSet::absent(),
            factors: vec![],
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn run_phase(
        &self,
        phase: Phase,
        net: &mut JppNet,
        opt: &mut Sgd,
        start_epoch: usize,
        step: &mut usize,
        records: &mut Vec<EpochRecord>,
        max_steps: Option<usize>,
    ) -> Result<(), TrainError> {
        let epochs = phase.epochs(self.cfg);
        let spe = self.steps_per_epoch();
        let total = epochs * spe;
        let mode = phase.loss_mode();
        for epoch in start_epoch..epochs {
            if max_steps.is_some_and(|m| *step >= m) {
                break;
            }
            let mut order = self.ids.clone();
            order.shuffle(&mut self.rng_for(phase, epoch, "order"));
            let mut sums = EpochSums::default();
            let mut lr = 0.0;
            for (b, batch) in order.chunks(self.cfg.batch_size).enumerate() {
                let results = par::try_map_range(batch.len(), |i| {
                    let s = self.load(phase, &batch[i])?;
                    let s = augment(&s, &mut self.rng_for(phase, epoch, &s.id), self.cfg);
                    sample_gradients(net, &s, self.cfg, mode, phase.uses_joints())
                })?;
                let mut grads = Grads::new(net.params.len());
                let n = results.len() as f64;
                let mut batch_loss = 0.0;
                for (g, br) in results {
                    batch_loss += br.total / n;
                    sums.add(&br);
                    grads.merge(g);
                }
                grads.scale(1.0 / n);
                if !batch_loss.is_finite() || !grads.is_finite() {
                    return Err(TrainError::Diverged {
                        phase: phase.name().into(),
                        epoch,
                        step: *step,
                        loss: batch_loss,
                    });
                }
                clip_grad_norm(&mut grads, self.cfg.grad_clip);
                lr = poly_lr(self.cfg.base_lr, epoch * spe + b, total, self.cfg.lr_power);
                opt.step(&mut net.params, &grads, lr);
                *step += 1;
            }
            let rec = sums.record(phase, epoch, *step, lr);
            self.append_log(&rec)?;
            records.push(rec);
            self.save_state(phase, epoch + 1, *step, net, opt)?;
        }
        Ok(())
    }

    fn append_log(&self, rec: &EpochRecord) -> Result<(), TrainError> {
        let path = self.out.join(LOG_FILE);
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| TrainError::io(&path, e))?;
        let line = serde_json::to_string(rec).expect("record serialises");
        writeln!(f, "{line}").map_err(|e| TrainError::io(&path, e))
    }

    fn rewrite_log(&self, records: &[EpochRecord]) -> Result<(), TrainError> {
        let path = self.out.join(LOG_FILE);
        let text: String = records
            .iter()
            .map(|r| serde_json::to_string(r).expect("record serialises") + "\n")
            .collect();
        std::fs::write(&path, text).map_err(|e| TrainError::io(&path, e))
    }

    fn save_state(&self, phase: Phase, epoch: usize, step: usize, net: &JppNet, opt: &Sgd) -> Result<(), TrainError> {
        let mut store = net.params.clone();
        for (p, v) in net.params.iter().zip(&opt.velocity) {
            store.insert(&format!("{MOMENTUM_PREFIX}{}", p.name), p.shape.clone(), v.clone());
        }
        let meta = json!({
            "phase": phase,
            "epoch": epoch,
            "step": step,
            "net_config": net.config,
            "train_config": self.cfg,
        });
        Ok(checkpoint::save(&self.out.join(STATE_FILE), &store, &meta)?)
    }

    fn load_state(&self, mode: TrainMode) -> Result<ResumePoint, TrainError> {
        let path = self.out.join(STATE_FILE);
        if !path.exists() {
            return Err(TrainError::Resume(format!("no {} in {}", STATE_FILE, self.out.display())));
        }
        let (store, meta) = checkpoint::load(&path)?;
        let bad = |m: &str| TrainError::Resume(format!("{}: {m}", path.display()));
        let saved: TrainConfig =
            serde_json::from_value(meta["train_config"].clone()).map_err(|e| bad(&e.to_string()))?;
        if &saved != self.cfg {
            return Err(bad("training config differs from the one being resumed"));
        }
        let phase: Phase = serde_json::from_value(meta["phase"].clone()).map_err(|e| bad(&e.to_string()))?;
        if !mode.phases().contains(&phase) {
            return Err(bad(&format!("state belongs to phase {}, not part of this mode", phase.name())));
        }
        let num = |k: &str| meta[k].as_u64().map(|v| v as usize).ok_or_else(|| bad(&format!("missing {k}")));
        let (epoch, step) = (num("epoch")?, num("step")?);
        let mut params = ParamStore::new();
        let mut momentum = ParamStore::new();
        for p in store.iter() {
            match p.name.strip_prefix(MOMENTUM_PREFIX) {
                Some(n) => momentum.insert(n, p.shape.clone(), p.data.clone()),
                None => params.insert(&p.name, p.shape.clone(), p.data.clone()),
            };
        }
        let net = JppNet::from_parts(self.cfg.net_config(phase.model_kind()), params)?;
        let mut opt = Sgd::new(&net.params, self.cfg.momentum, self.cfg.weight_decay);
        for (p, v) in net.params.iter().zip(opt.velocity.iter_mut()) {
            let m = momentum.by_name(&p.name).ok_or_else(|| bad(&format!("no momentum for {}", p.name)))?;
            v.copy_from_slice(&m.data);
        }
        Ok(ResumePoint {
            phase,
            epoch,
            step,
            net,
            opt,
        })
    }
}

#[derive(Default)]
struct EpochSums {
    n: usize,
    total: f64,
    parsing: Vec<f64>,
    pose: Vec<f64>,
    l_joint: Option<f64>,
}

impl EpochSums {
    fn add(&mut self, b: &LossBreakdown) {
        self.n += 1;
        self.total += b.total;
        add_into(&mut self.parsing, &b.parsing);
        add_into(&mut self.pose, &b.pose);
        if let Some(s) = &b.structure {
            *self.l_joint.get_or_insert(0.0) += s.l_joint;
        }
    }

    fn record(self, phase: Phase, epoch: usize, step: usize, lr: f64) -> EpochRecord {
        let n = self.n.max(1) as f64;
        EpochRecord {
            phase,
            epoch,
            step,
            lr,
            loss: self.total / n,
            parsing: self.parsing.iter().map(|v| v / n).collect(),
            pose: self.pose.iter().map(|v| v / n).collect(),
            l_joint: self.l_joint.map(|v| v / n),
        }
    }
}

fn add_into(acc: &mut Vec<f64>, v: &[f64]) {
    if acc.len() < v.len() {
        acc.resize(v.len(), 0.0);
    }
    acc.iter_mut().zip(v).for_each(|(a, b)| *a += b);
}
