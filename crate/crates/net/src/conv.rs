//! Dense kernels: im2col convolution on top of a blocked GEMM, max pooling
//! and bilinear resampling, each with its adjoint.

use jpp_core::planes::bilinear_taps;
use jpp_core::Planes;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvGeom {
    pub k: usize,
    pub stride: usize,
    pub dilation: usize,
}

impl ConvGeom {
    pub fn new(k: usize, stride: usize, dilation: usize) -> Self {
        assert!(k % 2 == 1 && stride >= 1 && dilation >= 1, "unsupported conv geometry");
        Self { k, stride, dilation }
    }

    /// "Same" padding for odd kernels.
    pub fn pad(&self) -> usize {
        self.dilation * (self.k - 1) / 2
    }

    pub fn out_size(&self, n: usize) -> usize {
        (n + 2 * self.pad() - self.dilation * (self.k - 1) - 1) / self.stride + 1
    }

    fn pointwise(&self) -> bool {
        self.k == 1 && self.stride == 1
    }
}

/// `c = a * b (+ c if accumulate)`, with explicit row/column strides.
#[allow(clippy::too_many_arguments)]
pub fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_rs: usize,
    a_cs: usize,
    b: &[f64],
    b_rs: usize,
    b_cs: usize,
    c: &mut [f64],
    accumulate: bool,
) {
    assert!(m == 0 || k == 0 || a.len() > (m - 1) * a_rs + (k - 1) * a_cs);
    assert!(k == 0 || n == 0 || b.len() > (k - 1) * b_rs + (n - 1) * b_cs);
    assert!(c.len() >= m * n);
    let beta = if accumulate { 1.0 } else { 0.0 };
    // SAFETY: the asserts above bound every index the kernel touches.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            a_rs as isize,
            a_cs as isize,
            b.as_ptr(),
            b_rs as isize,
            b_cs as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Rows are `(ci, ky, kx)` taps, columns output pixels.
pub fn im2col(x: &Planes, g: ConvGeom) -> (Vec<f64>, usize, usize) {
    let (c, h, w) = x.shape();
    let (ho, wo) = (g.out_size(h), g.out_size(w));
    let n = ho * wo;
    let mut col = vec![0.0; c * g.k * g.k * n];
    let p = g.pad() as isize;
    for ci in 0..c {
        let src = x.channel(ci);
        for ky in 0..g.k {
            for kx in 0..g.k {
                let row = (ci * g.k + ky) * g.k + kx;
                let dst = &mut col[row * n..(row + 1) * n];
                for oy in 0..ho {
                    let iy = (oy * g.stride + ky * g.dilation) as isize - p;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let srow = &src[iy as usize * w..(iy as usize + 1) * w];
                    let drow = &mut dst[oy * wo..(oy + 1) * wo];
                    for (ox, d) in drow.iter_mut().enumerate() {
                        let ix = (ox * g.stride + kx * g.dilation) as isize - p;
                        if ix >= 0 && ix < w as isize {
                            *d = srow[ix as usize];
                        }
                    }
                }
            }
        }
    }
    (col, ho, wo)
}

/// Adjoint of [`im2col`].
pub fn col2im(col: &[f64], c: usize, h: usize, w: usize, g: ConvGeom) -> Planes {
    let (ho, wo) = (g.out_size(h), g.out_size(w));
    let n = ho * wo;
    let mut x = Planes::zeros(c, h, w);
    let p = g.pad() as isize;
    for ci in 0..c {
        let dst = x.channel_mut(ci);
        for ky in 0..g.k {
            for kx in 0..g.k {
                let row = (ci * g.k + ky) * g.k + kx;
                let src = &col[row * n..(row + 1) * n];
                for oy in 0..ho {
                    let iy = (oy * g.stride + ky * g.dilation) as isize - p;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let base = iy as usize * w;
                    for ox in 0..wo {
                        let ix = (ox * g.stride + kx * g.dilation) as isize - p;
                        if ix >= 0 && ix < w as isize {
                            dst[base + ix as usize] += src[oy * wo + ox];
                        }
                    }
                }
            }
        }
    }
    x
}

/// `w` is `cout x (cin*k*k)` row-major.
pub fn conv_forward(x: &Planes, w: &[f64], b: Option<&[f64]>, cout: usize, g: ConvGeom) -> Planes {
    let (c, h, wd) = x.shape();
    let kk = c * g.k * g.k;
    assert_eq!(w.len(), cout * kk, "weight does not match input channels");
    let (ho, wo) = (g.out_size(h), g.out_size(wd));
    let n = ho * wo;
    let mut y = vec![0.0; cout * n];
    if let Some(b) = b {
        for (co, row) in y.chunks_mut(n).enumerate() {
            row.fill(b[co]);
        }
    }
    if g.pointwise() {
        gemm(cout, kk, n, w, kk, 1, x.as_slice(), n, 1, &mut y, b.is_some());
    } else {
        let (col, _, _) = im2col(x, g);
        gemm(cout, kk, n, w, kk, 1, &col, n, 1, &mut y, b.is_some());
    }
    Planes::from_vec(cout, ho, wo, y).expect("shape computed above")
}

pub struct ConvGrads {
    pub dx: Planes,
    pub dw: Vec<f64>,
    pub db: Vec<f64>,
}

pub fn conv_backward(x: &Planes, w: &[f64], dy: &Planes, g: ConvGeom) -> ConvGrads {
    let (c, h, wd) = x.shape();
    let cout = dy.channels();
    let kk = c * g.k * g.k;
    let n = dy.plane_len();
    let db = (0..cout).map(|co| dy.channel(co).iter().sum()).collect();
    let mut dw = vec![0.0; cout * kk];
    let mut dcol = vec![0.0; kk * n];
    let dys = dy.as_slice();
    // dcol = W^T dY
    gemm(kk, cout, n, w, 1, kk, dys, n, 1, &mut dcol, false);
    let dx = if g.pointwise() {
        // dW = dY X^T
        gemm(cout, n, kk, dys, n, 1, x.as_slice(), 1, n, &mut dw, false);
        Planes::from_vec(c, h, wd, dcol).expect("pointwise keeps shape")
    } else {
        let (col, _, _) = im2col(x, g);
        gemm(cout, n, kk, dys, n, 1, &col, 1, n, &mut dw, false);
        col2im(&dcol, c, h, wd, g)
    };
    ConvGrads { dx, dw, db }
}

/// 3x3 / stride 2 / pad 1 max pooling; returns flat argmax indices.
pub fn max_pool(x: &Planes) -> (Planes, Vec<u32>) {
    let (c, h, w) = x.shape();
    let (ho, wo) = ((h + 1) / 2, (w + 1) / 2);
    let mut y = Planes::zeros(c, ho, wo);
    let mut arg = vec![0u32; c * ho * wo];
    for ci in 0..c {
        let src = x.channel(ci);
        for oy in 0..ho {
            for ox in 0..wo {
                let mut best = f64::NEG_INFINITY;
                let mut bi = 0usize;
                for dy in 0..3 {
                    let iy = (2 * oy + dy) as isize - 1;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    for dx in 0..3 {
                        let ix = (2 * ox + dx) as isize - 1;
                        if ix < 0 || ix >= w as isize {
                            continue;
                        }
                        let i = iy as usize * w + ix as usize;
                        if src[i] > best {
                            best = src[i];
                            bi = i;
                        }
                    }
                }
                let o = (ci * ho + oy) * wo + ox;
                y.as_mut_slice()[o] = best;
                arg[o] = (ci * h * w + bi) as u32;
            }
        }
    }
    (y, arg)
}

pub fn max_pool_backward(dy: &Planes, arg: &[u32], shape: (usize, usize, usize)) -> Planes {
    let mut dx = Planes::zeros(shape.0, shape.1, shape.2);
    let d = dx.as_mut_slice();
    for (g, &i) in dy.as_slice().iter().zip(arg) {
        d[i as usize] += g;
    }
    dx
}

/// Adjoint of `Planes::resized` (bilinear, half-pixel centres).
pub fn resize_backward(dy: &Planes, h: usize, w: usize) -> Planes {
    let (c, ho, wo) = dy.shape();
    let ty = bilinear_taps(h, ho);
    let tx = bilinear_taps(w, wo);
    let mut dx = Planes::zeros(c, h, w);
    for ci in 0..c {
        let src = dy.channel(ci);
        let dst = dx.channel_mut(ci);
        for (oy, &(y0, y1, fy)) in ty.iter().enumerate() {
            for (ox, &(x0, x1, fx)) in tx.iter().enumerate() {
                let g = src[oy * wo + ox];
                dst[y0 * w + x0] += g * (1.0 - fy) * (1.0 - fx);
                dst[y0 * w + x1] += g * (1.0 - fy) * fx;
                dst[y1 * w + x0] += g * fy * (1.0 - fx);
                dst[y1 * w + x1] += g * fy * fx;
            }
        }
    }
    dx
}
