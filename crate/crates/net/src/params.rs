use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type ParamId = usize;

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// How a freshly declared parameter is filled.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Init {
    /// Normal with std `gain * sqrt(2 / fan_in)`.
    He { fan_in: usize, gain: f64 },
    Const(f64),
}

/// Named, ordered parameter tensors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    params: Vec<Param>,
    index: HashMap<String, ParamId>,
}

fn name_seed(seed: u64, name: &str) -> u64 {
    // FNV-1a over the name, folded with the seed
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed.rotate_left(17);
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h ^ seed
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Total number of scalars.
    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.data.len()).sum()
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied()
    }

    pub fn get(&self, id: ParamId) -> &Param {
        &self.params[id]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Param {
        &mut self.params[id]
    }

    pub fn by_name(&self, name: &str) -> Option<&Param> {
        self.id(name).map(|i| &self.params[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Param> {
        self.params.iter_mut()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.iter().map(|p| p.name.as_str())
    }

    /// Adds a parameter; panics on a duplicate name.
    pub fn insert(&mut self, name: &str, shape: Vec<usize>, data: Vec<f64>) -> ParamId {
        assert_eq!(shape.iter().product::<usize>(), data.len(), "{name}: shape/data mismatch");
        assert!(!self.index.contains_key(name), "duplicate parameter {name}");
        let id = self.params.len();
        self.params.push(Param {
            name: name.to_string(),
            shape,
            data,
        });
        self.index.insert(name.to_string(), id);
        id
    }

    /// Adds a parameter filled by `init`, drawing from a stream keyed by
    /// `(seed, name)` so values do not depend on declaration order.
    pub fn declare(&mut self, name: &str, shape: Vec<usize>, init: Init, seed: u64) -> ParamId {
        let n = shape.iter().product();
        let data = match init {
            Init::Const(v) => vec![v; n],
            Init::He { fan_in, gain } => {
                let std = gain * (2.0 / fan_in.max(1) as f64).sqrt();
                let mut rng = ChaCha8Rng::seed_from_u64(name_seed(seed, name));
                (0..n)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        std * z
                    })
                    .collect()
            }
        };
        self.insert(name, shape, data)
    }

    /// Copies every tensor whose name and shape also exist in `src`;
    /// returns how many were copied.
    pub fn copy_matching_from(&mut self, src: &ParamStore) -> usize {
        let mut n = 0;
        for p in &mut self.params {
            if let Some(s) = src.by_name(&p.name) {
                if s.shape == p.shape {
                    p.data.copy_from_slice(&s.data);
                    n += 1;
                }
            }
        }
        n
    }

    pub fn flat(&self) -> Vec<f64> {
        self.params.iter().flat_map(|p| p.data.iter().copied()).collect()
    }
}

/// Gradient accumulator indexed like the store it was computed for.
#[derive(Clone, Debug, PartialEq)]
pub struct Grads {
    slots: Vec<Option<Vec<f64>>>,
}

impl Grads {
    pub fn new(n_params: usize) -> Self {
        Self {
            slots: vec![None; n_params],
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn get(&self, id: ParamId) -> Option<&[f64]> {
        self.slots[id].as_deref()
    }

    /// Adds `g` into slot `id`.
    pub fn accumulate(&mut self, id: ParamId, g: &[f64]) {
        match &mut self.slots[id] {
            Some(acc) => acc.iter_mut().zip(g).for_each(|(a, b)| *a += b),
            slot @ None => *slot = Some(g.to_vec()),
        }
    }

    pub fn accumulate_owned(&mut self, id: ParamId, g: Vec<f64>) {
        match &mut self.slots[id] {
            Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, b)| *a += b),
            slot @ None => *slot = Some(g),
        }
    }

    pub fn merge(&mut self, other: Grads) {
        for (id, g) in other.slots.into_iter().enumerate() {
            if let Some(g) = g {
                self.accumulate_owned(id, g);
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for g in self.slots.iter_mut().flatten() {
            g.iter_mut().for_each(|v| *v *= s);
        }
    }

    pub fn sq_norm(&self) -> f64 {
        self.slots.iter().flatten().flatten().map(|v| v * v).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.slots.iter().flatten().flatten().all(|v| v.is_finite())
    }
}
