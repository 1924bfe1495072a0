use jpp_core::{Planes, RgbImage, NUM_CLASSES, NUM_JOINTS};

use crate::config::{BlockKind, ModelKind, NetConfig, REFINE_KERNELS};
use crate::conv::ConvGeom;
use crate::error::NetError;
use crate::graph::{Ctx, TraceEntry, Var};
use crate::params::ParamStore;

/// Graph handles for one stage.
#[derive(Clone, Debug)]
pub struct StageVars {
    pub parsing: Var,
    pub pose: Option<Var>,
    pub parsing_context: Option<Var>,
    pub pose_context: Option<Var>,
}

/// Plain values for one stage.
#[derive(Clone, Debug, PartialEq)]
pub struct StageOutputs {
    pub parsing_scores: Planes,
    pub pose_heatmaps: Option<Planes>,
    pub parsing_context: Option<Planes>,
    pub pose_context: Option<Planes>,
}

impl From<&StageVars> for StageOutputs {
    fn from(s: &StageVars) -> Self {
        Self {
            parsing_scores: s.parsing.value().clone(),
            pose_heatmaps: s.pose.as_ref().map(|v| v.value().clone()),
            parsing_context: s.parsing_context.as_ref().map(|v| v.value().clone()),
            pose_context: s.pose_context.as_ref().map(|v| v.value().clone()),
        }
    }
}

/// Maps 8-bit RGB to roughly zero-mean, unit-range planes.
pub fn image_to_planes(img: &RgbImage) -> Planes {
    let (h, w) = (img.height(), img.width());
    let mut p = Planes::zeros(3, h, w);
    for (i, px) in img.as_raw().chunks_exact(3).enumerate() {
        for c in 0..3 {
            p.as_mut_slice()[c * h * w + i] = (px[c] as f64 - 127.5) / 64.0;
        }
    }
    p
}

fn groups_for(c: usize, max: usize) -> usize {
    (1..=max.min(c)).rev().find(|g| c % g == 0).unwrap_or(1)
}

struct Layers<'c, 'a> {
    ctx: &'c Ctx<'a>,
    cfg: &'c NetConfig,
}

impl Layers<'_, '_> {
    /// conv, optional group norm, optional ReLU
    fn conv(&self, x: &Var, name: &str, cout: usize, geom: ConvGeom, relu: bool) -> Var {
        let mut y = self.ctx.conv(x, name, cout, geom);
        if self.cfg.norm_groups > 0 {
            y = self.ctx.group_norm(&y, &format!("{name}.gn"), groups_for(cout, self.cfg.norm_groups));
        }
        if relu {
            y = self.ctx.relu(&y);
        }
        y
    }

    fn head(&self, x: &Var, name: &str, cout: usize, geom: ConvGeom) -> Var {
        self.ctx.conv_with_gain(x, name, cout, geom, self.cfg.head_gain)
    }

    fn block(&self, x: &Var, name: &str, cout: usize, stride: usize, dil: usize) -> Var {
        let cin = x.shape().0;
        let shortcut = if cin != cout || stride != 1 {
            self.conv(x, &format!("{name}.proj"), cout, ConvGeom::new(1, stride, 1), false)
        } else {
            x.clone()
        };
        let body = match self.cfg.block {
            BlockKind::Basic => {
                let a = self.conv(x, &format!("{name}.conv1"), cout, ConvGeom::new(3, stride, dil), true);
                self.conv(&a, &format!("{name}.conv2"), cout, ConvGeom::new(3, 1, dil), false)
            }
            BlockKind::Bottleneck => {
                let mid = cout / 4;
                let a = self.conv(x, &format!("{name}.conv1"), mid, ConvGeom::new(1, 1, 1), true);
                let b = self.conv(&a, &format!("{name}.conv2"), mid, ConvGeom::new(3, stride, dil), true);
                self.conv(&b, &format!("{name}.conv3"), cout, ConvGeom::new(1, 1, 1), false)
            }
        };
        let y = self.ctx.add(&body, &shortcut);
        self.ctx.relu(&y)
    }

    fn stage(&self, x: &Var, name: &str, n: usize, cout: usize, stride: usize, dil: usize) -> Var {
        let mut y = self.block(x, &format!("{name}.block0"), cout, stride, dil);
        for i in 1..n {
            y = self.block(&y, &format!("{name}.block{i}"), cout, 1, dil);
        }
        self.ctx.note(name, &y);
        y
    }

    /// Returns (res4, res5), both at the output stride.
    fn backbone(&self, x: &Var) -> (Var, Var) {
        let c = self.cfg;
        let stem = self.conv(x, "backbone.stem", c.widths[0], ConvGeom::new(c.stem_kernel, 2, 1), true);
        let stem = self.ctx.max_pool(&stem);
        self.ctx.note("backbone.pool", &stem);
        let r2 = self.stage(&stem, "backbone.res2", c.blocks[0], c.widths[1], 1, 1);
        let r3 = self.stage(&r2, "backbone.res3", c.blocks[1], c.widths[2], 2, 1);
        let (s4, d4, d5) = if c.output_stride == 16 { (2, 1, 2) } else { (1, 2, 4) };
        let r4 = self.stage(&r3, "backbone.res4", c.blocks[2], c.widths[3], s4, d4);
        let r5 = self.stage(&r4, "backbone.res5", c.blocks[3], c.widths[4], 1, d5);
        (r4, r5)
    }

    /// Parallel dilated 3x3 heads summed into `cout` maps.
    fn aspp(&self, x: &Var, name: &str, cout: usize) -> Var {
        let mut acc: Option<Var> = None;
        for &r in &self.cfg.aspp_rates {
            let b = self.head(x, &format!("{name}.rate-{r}"), cout, ConvGeom::new(3, 1, r));
            acc = Some(match acc {
                None => b,
                Some(a) => self.ctx.add(&a, &b),
            });
        }
        let out = acc.expect("rates validated non-empty");
        self.ctx.note(name, &out);
        out
    }

    fn part_context(&self, res5: &Var) -> Var {
        let h = &self.cfg.heads;
        let a = self.conv(res5, "part.conv-1", h.part[0], ConvGeom::new(3, 1, 1), true);
        self.conv(&a, "part.conv-2", h.part[1], ConvGeom::new(3, 1, 1), true)
    }

    /// (pose context, heatmaps)
    fn joint_module(&self, res4: &Var) -> (Var, Var) {
        let h = &self.cfg.heads;
        let mut y = res4.clone();
        for i in 0..6 {
            y = self.conv(&y, &format!("joint.conv-{}", i + 1), h.joint[i], ConvGeom::new(3, 1, 1), true);
        }
        let ctx6 = y.clone();
        let y = self.conv(&y, "joint.conv-7", h.joint[6], ConvGeom::new(1, 1, 1), true);
        let maps = self.head(&y, "joint.conv-8", NUM_JOINTS, ConvGeom::new(1, 1, 1));
        (ctx6, maps)
    }

    /// Shared trunk of both refinement branches; returns the new context.
    fn refine_trunk(&self, name: &str, pose: &Var, parsing: &Var, context: &Var) -> Var {
        let h = &self.cfg.heads;
        let one = ConvGeom::new(1, 1, 1);
        let r1 = self.conv(pose, &format!("{name}.remap-1"), h.remap, one, true);
        let r2 = self.conv(parsing, &format!("{name}.remap-2"), h.remap, one, true);
        let cat = self.ctx.concat(&[r1, r2, context.clone()]);
        self.ctx.note(&format!("{name}.concat"), &cat);
        let mut y = cat;
        for (i, &k) in REFINE_KERNELS.iter().enumerate() {
            y = self.conv(&y, &format!("{name}.conv-{}", i + 1), h.refine[i], ConvGeom::new(k, 1, 1), true);
        }
        self.conv(&y, &format!("{name}.conv-5"), h.refine[4], one, true)
    }

    fn refine(&self, s: usize, prev: &StageVars) -> StageVars {
        let pose = prev.pose.as_ref().expect("joint model");
        let pctx = self.refine_trunk(
            &format!("pose_refine{s}"),
            pose,
            &prev.parsing,
            prev.pose_context.as_ref().expect("joint model"),
        );
        let maps = self.head(&pctx, &format!("pose_refine{s}.conv-6"), NUM_JOINTS, ConvGeom::new(1, 1, 1));
        let sctx = self.refine_trunk(
            &format!("parse_refine{s}"),
            pose,
            &prev.parsing,
            prev.parsing_context.as_ref().expect("joint model"),
        );
        let scores = self.aspp(&sctx, &format!("parse_refine{s}.aspp"), NUM_CLASSES);
        StageVars {
            parsing: scores,
            pose: Some(maps),
            parsing_context: Some(sctx),
            pose_context: Some(pctx),
        }
    }
}

/// Builds the stage graph for one input image. Stage 0 comes from the
/// part and joint modules (fused over input scales when MSC is on); every
/// refinement stage consumes the previous stage's maps and contexts.
pub fn forward_graph(ctx: &Ctx, cfg: &NetConfig, image: &Var) -> Result<Vec<StageVars>, NetError> {
    let (_, h, w) = image.shape();
    cfg.check_input(h, w)?;
    let l = Layers { ctx, cfg };
    let (oh, ow) = (h / cfg.output_stride, w / cfg.output_stride);
    let joint = cfg.kind == ModelKind::Joint;
    let scales: &[f64] = if cfg.msc { &cfg.msc_scales } else { &[1.0] };

    let mut parse_maps = Vec::new();
    let mut pose_maps = Vec::new();
    let mut contexts = None;
    for (i, &s) in scales.iter().enumerate() {
        let x = if i == 0 {
            image.clone()
        } else {
            ctx.resize(image, cfg.scaled_side(h, s), cfg.scaled_side(w, s))
        };
        let (r4, r5) = l.backbone(&x);
        parse_maps.push(ctx.resize(&l.aspp(&r5, "part.aspp", NUM_CLASSES), oh, ow));
        if joint {
            let (pctx, maps) = l.joint_module(&r4);
            pose_maps.push(ctx.resize(&maps, oh, ow));
            if i == 0 {
                contexts = Some((l.part_context(&r5), pctx));
            }
        }
    }
    let stage0 = StageVars {
        parsing: ctx.max(&parse_maps),
        pose: joint.then(|| ctx.max(&pose_maps)),
        parsing_context: contexts.as_ref().map(|c| c.0.clone()),
        pose_context: contexts.map(|c| c.1),
    };
    let mut stages = vec![stage0];
    for s in 1..=cfg.stages {
        let next = l.refine(s, stages.last().expect("non-empty"));
        stages.push(next);
    }
    Ok(stages)
}

/// Network weights together with the architecture they belong to.
#[derive(Clone, Debug, PartialEq)]
pub struct JppNet {
    pub config: NetConfig,
    pub params: ParamStore,
}

impl JppNet {
    /// Declares and initialises every parameter of `config`.
    pub fn new(config: NetConfig, seed: u64) -> Result<Self, NetError> {
        config.validate()?;
        let ctx = Ctx::building(seed);
        let s = config.output_stride;
        // smallest legal input; the parameter set does not depend on size
        let probe = Var::leaf(Planes::zeros(3, s, s));
        forward_graph(&ctx, &config, &probe)?;
        let params = ctx.into_params().expect("building context");
        Ok(Self { config, params })
    }

    pub fn from_parts(config: NetConfig, params: ParamStore) -> Result<Self, NetError> {
        let reference = Self::new(config.clone(), 0)?;
        if reference.params.len() != params.len() {
            return Err(NetError::Checkpoint(format!(
                "expected {} tensors, found {}",
                reference.params.len(),
                params.len()
            )));
        }
        for p in reference.params.iter() {
            match params.by_name(&p.name) {
                Some(q) if q.shape == p.shape => {}
                Some(q) => {
                    return Err(NetError::Checkpoint(format!(
                        "{}: shape {:?}, expected {:?}",
                        p.name, q.shape, p.shape
                    )))
                }
                None => return Err(NetError::Checkpoint(format!("missing tensor {}", p.name))),
            }
        }
        // re-key into canonical order
        let mut ordered = reference.params;
        ordered.copy_matching_from(&params);
        Ok(Self {
            config,
            params: ordered,
        })
    }

    /// Layer shapes for an input size without allocating or running weights.
    pub fn shape_trace(config: &NetConfig, height: usize, width: usize) -> Result<Vec<TraceEntry>, NetError> {
        config.validate()?;
        let ctx = Ctx::shapes_only().with_trace();
        forward_graph(&ctx, config, &Var::leaf(Planes::zeros(3, height, width)))?;
        Ok(ctx.take_trace())
    }

    pub fn forward(&self, image: &Planes) -> Result<Vec<StageOutputs>, NetError> {
        let ctx = Ctx::eval(&self.params);
        let stages = forward_graph(&ctx, &self.config, &Var::leaf(image.clone()))?;
        Ok(stages.iter().map(StageOutputs::from).collect())
    }

    /// Forward pass that also reports the shape of every named layer.
    pub fn forward_traced(&self, image: &Planes) -> Result<(Vec<StageOutputs>, Vec<TraceEntry>), NetError> {
        let ctx = Ctx::eval(&self.params).with_trace();
        let stages = forward_graph(&ctx, &self.config, &Var::leaf(image.clone()))?;
        Ok((stages.iter().map(StageOutputs::from).collect(), ctx.take_trace()))
    }
}
