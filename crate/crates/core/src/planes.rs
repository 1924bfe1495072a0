use crate::error::CoreError;

/// A `channels x height x width` stack of real-valued maps, channel-major.
///
/// Used for pose heatmaps (16 channels), pseudo-joint heatmaps (9) and
/// parsing score or probability maps (20).
#[derive(Clone, Debug, PartialEq)]
pub struct Planes {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

/// Non-negative heatmaps, one per joint or pseudo-joint.
pub type HeatmapStack = Planes;
/// Per-class scores or probabilities.
pub type ScoreMaps = Planes;

impl Planes {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    pub fn from_vec(
        channels: usize,
        height: usize,
        width: usize,
        data: Vec<f64>,
    ) -> Result<Self, CoreError> {
        if data.len() != channels * height * width {
            return Err(CoreError::BadBuffer {
                len: data.len(),
                height,
                width,
                channels,
            });
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    #[inline]
    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f64) {
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.plane_len();
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.shape() == other.shape()
    }

    /// Horizontal mirror of every channel followed by the channel permutation
    /// `perm` (output channel `c` comes from input channel `perm[c]`).
    pub fn flipped_with(&self, perm: &[u8]) -> Self {
        assert_eq!(perm.len(), self.channels);
        let mut out = Self::zeros(self.channels, self.height, self.width);
        for (c, &src) in perm.iter().enumerate() {
            let s = self.channel(src as usize);
            let d = out.channel_mut(c);
            for (srow, drow) in s.chunks_exact(self.width).zip(d.chunks_exact_mut(self.width)) {
                for (dv, sv) in drow.iter_mut().zip(srow.iter().rev()) {
                    *dv = *sv;
                }
            }
        }
        out
    }

    /// Bilinear resample of every channel (half-pixel centres, edge clamp).
    pub fn resized(&self, height: usize, width: usize) -> Self {
        assert!(height >= 1 && width >= 1, "resize target must be non-empty");
        if height == self.height && width == self.width {
            return self.clone();
        }
        let ys = bilinear_taps(self.height, height);
        let xs = bilinear_taps(self.width, width);
        let mut out = Self::zeros(self.channels, height, width);
        for c in 0..self.channels {
            let src = self.channel(c);
            let dst = out.channel_mut(c);
            for (oy, &(y0, y1, wy)) in ys.iter().enumerate() {
                let r0 = &src[y0 * self.width..(y0 + 1) * self.width];
                let r1 = &src[y1 * self.width..(y1 + 1) * self.width];
                for (ox, &(x0, x1, wx)) in xs.iter().enumerate() {
                    let top = r0[x0] * (1.0 - wx) + r0[x1] * wx;
                    let bot = r1[x0] * (1.0 - wx) + r1[x1] * wx;
                    dst[oy * width + ox] = top * (1.0 - wy) + bot * wy;
                }
            }
        }
        out
    }

    /// Maximum of each channel.
    pub fn channel_max(&self) -> Vec<f64> {
        (0..self.channels)
            .map(|c| {
                self.channel(c)
                    .iter()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    }

    pub fn channel_is_zero(&self, c: usize) -> bool {
        self.channel(c).iter().all(|&v| v == 0.0)
    }
}

/// For every output index: the two source indices and the weight of the
/// second one.
pub fn bilinear_taps(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(src - 1);
            (i0, i1, s - i0 as f64)
        })
        .collect()
}

/// Unit-amplitude isotropic Gaussian centred at `(cx, cy)` written into `out`
/// (an `height x width` plane).
pub fn render_gaussian(out: &mut [f64], height: usize, width: usize, cx: f64, cy: f64, sigma: f64) {
    assert!(sigma > 0.0, "sigma must be positive");
    let inv = 1.0 / (2.0 * sigma * sigma);
    for y in 0..height {
        let dy = y as f64 - cy;
        for x in 0..width {
            let dx = x as f64 - cx;
            out[y * width + x] = (-(dx * dx + dy * dy) * inv).exp();
        }
    }
}

pub fn resize_heatmaps(s: &HeatmapStack, height: usize, width: usize) -> HeatmapStack {
    s.resized(height, width)
}
