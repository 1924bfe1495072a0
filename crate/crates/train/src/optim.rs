use jpp_net::{Grads, ParamStore};

/// Weight decay applies to convolution weights only.
pub fn decays(name: &str) -> bool {
    name.ends_with(".weight")
}

/// `base * (1 - step / total)^power`.
pub fn poly_lr(base: f64, step: usize, total: usize, power: f64) -> f64 {
    if total == 0 {
        return base;
    }
    base * (1.0 - step.min(total) as f64 / total as f64).powf(power)
}

/// Rescale `g` so its global L2 norm is at most `max_norm`; returns the
/// norm before clipping. `max_norm == 0` disables clipping.
pub fn clip_grad_norm(g: &mut Grads, max_norm: f64) -> f64 {
    let norm = g.sq_norm().sqrt();
    if max_norm > 0.0 && norm > max_norm {
        g.scale(max_norm / norm);
    }
    norm
}

/// SGD with classical momentum: `v = m v + (g + wd w); w -= lr v`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sgd {
    pub momentum: f64,
    pub weight_decay: f64,
    pub velocity: Vec<Vec<f64>>,
}

impl Sgd {
    pub fn new(params: &ParamStore, momentum: f64, weight_decay: f64) -> Self {
        Self {
            momentum,
            weight_decay,
            velocity: params.iter().map(|p| vec![0.0; p.data.len()]).collect(),
        }
    }

    pub fn step(&mut self, params: &mut ParamStore, grads: &Grads, lr: f64) {
        assert_eq!(grads.len(), params.len(), "gradient slots do not match the store");
        for (id, (p, v)) in params.iter_mut().zip(&mut self.velocity).enumerate() {
            let wd = if decays(&p.name) { self.weight_decay } else { 0.0 };
            let g = grads.get(id);
            for (i, (w, vi)) in p.data.iter_mut().zip(v.iter_mut()).enumerate() {
                let gi = g.map_or(0.0, |g| g[i]) + wd * *w;
                *vi = self.momentum * *vi + gi;
                *w -= lr * *vi;
            }
        }
    }
}
