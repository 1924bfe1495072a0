use serde::{Deserialize, Serialize};

use crate::error::NetError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Toy,
    Full,
    /// Minimal widths for finite-difference checks.
    Tiny,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockKind {
    Basic,
    Bottleneck,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Backbone, part and joint modules plus refinement stages.
    Joint,
    /// Backbone and the parsing ASPP head only.
    ParsingOnly,
}

/// Kernel sizes of refinement conv-1 .. conv-4.
pub const REFINE_KERNELS: [usize; 4] = [3, 5, 7, 9];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadWidths {
    /// Part module conv-1, conv-2.
    pub part: [usize; 2],
    /// Joint module conv-1 .. conv-7 (conv-8 is the 16-way heatmap head).
    pub joint: [usize; 7],
    /// Width of each remap conv.
    pub remap: usize,
    /// Refinement conv-1 .. conv-5.
    pub refine: [usize; 5],
}

impl HeadWidths {
    pub fn full() -> Self {
        Self {
            part: [512, 256],
            joint: [512, 512, 256, 256, 256, 256, 512],
            remap: 128,
            refine: [512, 256, 256, 256, 256],
        }
    }

    pub fn divided(d: usize) -> Self {
        let f = Self::full();
        Self {
            part: f.part.map(|c| c / d),
            joint: f.joint.map(|c| c / d),
            remap: f.remap / d,
            refine: f.refine.map(|c| c / d),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    pub preset: Preset,
    pub kind: ModelKind,
    pub input_height: usize,
    pub input_width: usize,
    /// 8 or 16.
    pub output_stride: usize,
    pub stem_kernel: usize,
    /// Output widths of stem, res2, res3, res4, res5.
    pub widths: [usize; 5],
    /// Residual blocks in res2 .. res5.
    pub blocks: [usize; 4],
    pub block: BlockKind,
    pub heads: HeadWidths,
    pub aspp_rates: Vec<usize>,
    /// Refinement stages after stage 0 (0, 1 or 2).
    pub stages: usize,
    pub msc: bool,
    /// Input scales for MSC; the first must be 1.0.
    pub msc_scales: Vec<f64>,
    /// Group-norm groups after each non-head conv; 0 disables.
    pub norm_groups: usize,
    /// Init gain of the output heads relative to He init.
    pub head_gain: f64,
}

impl NetConfig {
    pub fn full() -> Self {
        Self {
            preset: Preset::Full,
            kind: ModelKind::Joint,
            input_height: 384,
            input_width: 384,
            output_stride: 8,
            stem_kernel: 7,
            widths: [64, 256, 512, 1024, 2048],
            blocks: [3, 4, 23, 3],
            block: BlockKind::Bottleneck,
            heads: HeadWidths::full(),
            aspp_rates: vec![6, 12, 18, 24],
            stages: 2,
            msc: false,
            msc_scales: vec![1.0, 0.75, 0.5],
            norm_groups: 32,
            head_gain: 0.1,
        }
    }

    pub fn toy() -> Self {
        Self {
            preset: Preset::Toy,
            kind: ModelKind::Joint,
            input_height: 128,
            input_width: 128,
            output_stride: 8,
            stem_kernel: 3,
            widths: [16, 16, 32, 64, 128],
            blocks: [1, 1, 1, 1],
            block: BlockKind::Basic,
            heads: HeadWidths::divided(16),
            aspp_rates: vec![2, 4, 6],
            stages: 2,
            msc: false,
            msc_scales: vec![1.0, 0.75, 0.5],
            norm_groups: 0,
            head_gain: 0.1,
        }
    }

    pub fn tiny() -> Self {
        Self {
            preset: Preset::Tiny,
            kind: ModelKind::Joint,
            input_height: 8,
            input_width: 8,
            output_stride: 8,
            stem_kernel: 3,
            widths: [3, 4, 4, 5, 6],
            blocks: [1, 1, 1, 1],
            block: BlockKind::Basic,
            heads: HeadWidths {
                part: [6, 4],
                joint: [6, 6, 4, 4, 4, 4, 6],
                remap: 2,
                refine: [8, 4, 4, 4, 4],
            },
            aspp_rates: vec![1, 2],
            stages: 1,
            msc: false,
            msc_scales: vec![1.0, 0.75, 0.5],
            norm_groups: 0,
            head_gain: 1.0,
        }
    }

    pub fn for_preset(p: Preset) -> Self {
        match p {
            Preset::Toy => Self::toy(),
            Preset::Full => Self::full(),
            Preset::Tiny => Self::tiny(),
        }
    }

    pub fn parsing_only(mut self) -> Self {
        self.kind = ModelKind::ParsingOnly;
        self.stages = 0;
        self
    }

    /// Width of every refinement concat: two remaps plus a context.
    pub fn concat_width(&self) -> usize {
        2 * self.heads.remap + self.heads.refine[4]
    }

    pub fn output_size(&self) -> (usize, usize) {
        (self.input_height / self.output_stride, self.input_width / self.output_stride)
    }

    pub fn check_input(&self, height: usize, width: usize) -> Result<(), NetError> {
        let s = self.output_stride;
        if height == 0 || width == 0 || height % s != 0 || width % s != 0 {
            return Err(NetError::Resolution { height, width, stride: s });
        }
        Ok(())
    }

    /// Input side used for an MSC branch: the nearest multiple of the stride.
    pub fn scaled_side(&self, n: usize, scale: f64) -> usize {
        let s = self.output_stride;
        ((n as f64 * scale / s as f64).round() as usize).max(1) * s
    }

    pub fn validate(&self) -> Result<(), NetError> {
        let bad = |m: &str| Err(NetError::Config(m.to_string()));
        if ![8, 16].contains(&self.output_stride) {
            return bad("output_stride must be 8 or 16");
        }
        if self.stages > 2 {
            return bad("stages must be 0, 1 or 2");
        }
        if self.kind == ModelKind::ParsingOnly && self.stages != 0 {
            return bad("a parsing-only model has no refinement stages");
        }
        if self.aspp_rates.is_empty() || self.aspp_rates.contains(&0) {
            return bad("aspp_rates must be non-empty and positive");
        }
        if self.stem_kernel % 2 == 0 {
            return bad("stem_kernel must be odd");
        }
        if self.widths.contains(&0) || self.blocks.contains(&0) {
            return bad("backbone widths and block counts must be positive");
        }
        if self.block == BlockKind::Bottleneck && self.widths[1..].iter().any(|w| w % 4 != 0) {
            return bad("bottleneck widths must be divisible by 4");
        }
        let h = &self.heads;
        if h.part.contains(&0) || h.joint.contains(&0) || h.refine.contains(&0) || h.remap == 0 {
            return bad("head widths must be positive");
        }
        // every refinement stage sees [remap, remap, context]; contexts come
        // from part conv-2 / joint conv-6 at stage 1 and refine conv-5 later
        if h.part[1] != h.refine[4] || h.joint[5] != h.refine[4] {
            return Err(NetError::Config(format!(
                "concat channel mismatch: part context {}, pose context {}, refinement context {}",
                h.part[1], h.joint[5], h.refine[4]
            )));
        }
        if self.msc && (self.msc_scales.is_empty() || self.msc_scales[0] != 1.0) {
            return bad("msc_scales must start with 1.0");
        }
        if self.msc_scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return bad("msc_scales must be positive");
        }
        if !(self.head_gain.is_finite() && self.head_gain > 0.0) {
            return bad("head_gain must be positive");
        }
        self.check_input(self.input_height, self.input_width)
    }
}
