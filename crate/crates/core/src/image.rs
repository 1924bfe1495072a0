/// Interleaved 8-bit RGB image, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RgbImage {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(height: usize, width: usize, fill: [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(height * width * 3);
        for _ in 0..height * width {
            data.extend_from_slice(&fill);
        }
        Self {
            height,
            width,
            data,
        }
    }

    pub fn from_raw(height: usize, width: usize, data: Vec<u8>) -> Option<Self> {
        (data.len() == height * width * 3).then_some(Self {
            height,
            width,
            data,
        })
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
    pub fn get(&self, y: usize, x: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    pub fn flipped(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for row in self.data.chunks_exact(self.width * 3) {
            for px in row.chunks_exact(3).rev() {
                data.extend_from_slice(px);
            }
        }
        Self {
            height: self.height,
            width: self.width,
            data,
        }
    }

    /// Bilinear resample with half-pixel centres.
    pub fn resized(&self, height: usize, width: usize) -> Self {
        if height == self.height && width == self.width {
            return self.clone();
        }
        let ys = crate::planes::bilinear_taps(self.height, height);
        let xs = crate::planes::bilinear_taps(self.width, width);
        let mut out = Self::new(height, width, [0; 3]);
        for (oy, &(y0, y1, wy)) in ys.iter().enumerate() {
            for (ox, &(x0, x1, wx)) in xs.iter().enumerate() {
                let (a, b, c, d) = (
                    self.get(y0, x0),
                    self.get(y0, x1),
                    self.get(y1, x0),
                    self.get(y1, x1),
                );
                let mut px = [0u8; 3];
                for k in 0..3 {
                    let top = a[k] as f64 * (1.0 - wx) + b[k] as f64 * wx;
                    let bot = c[k] as f64 * (1.0 - wx) + d[k] as f64 * wx;
                    px[k] = (top * (1.0 - wy) + bot * wy).round().clamp(0.0, 255.0) as u8;
                }
                out.set(oy, ox, px);
            }
        }
        out
    }

    /// Window copy with `pad` outside the source; offsets may be negative.
    pub fn crop(&self, y0: isize, x0: isize, height: usize, width: usize, pad: [u8; 3]) -> Self {
        let mut out = Self::new(height, width, pad);
        for y in 0..height {
            let sy = y0 + y as isize;
            if sy < 0 || sy >= self.height as isize {
                continue;
            }
            for x in 0..width {
                let sx = x0 + x as isize;
                if sx < 0 || sx >= self.width as isize {
                    continue;
                }
                out.set(y, x, self.get(sy as usize, sx as usize));
            }
        }
        out
    }

    /// Per-channel mean over all pixels, rounded.
    pub fn mean_color(&self) -> [u8; 3] {
        let n = (self.height * self.width).max(1) as u64;
        let mut acc = [0u64; 3];
        for px in self.data.chunks_exact(3) {
            for k in 0..3 {
                acc[k] += px[k] as u64;
            }
        }
        [
            ((acc[0] + n / 2) / n) as u8,
            ((acc[1] + n / 2) / n) as u8,
            ((acc[2] + n / 2) / n) as u8,
        ]
    }
}
