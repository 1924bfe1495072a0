//! Define-by-run reverse-mode differentiation over `Planes` values.
//!
//! Every operation goes through a [`Ctx`]. With recording on, each result
//! remembers its inputs so [`backward`] can walk the graph; with recording
//! off, results are plain values and intermediate buffers are released as
//! soon as they go out of scope.

use std::cell::RefCell;
use std::collections::{HashMap, HashSet};
use std::rc::Rc;

use jpp_core::Planes;

use crate::conv::{self, ConvGeom};
use crate::params::{Grads, Init, ParamId, ParamStore};

pub const GN_EPS: f64 = 1e-5;

#[derive(Clone)]
pub struct Var(Rc<Node>);

struct Node {
    value: Planes,
    op: Op,
}

enum Op {
    Leaf,
    Conv {
        x: Var,
        w: ParamId,
        b: ParamId,
        geom: ConvGeom,
    },
    Relu(Var),
    Add(Var, Var),
    Concat(Vec<Var>),
    GroupNorm {
        x: Var,
        gamma: ParamId,
        beta: ParamId,
        groups: usize,
        mean: Vec<f64>,
        rstd: Vec<f64>,
    },
    MaxPool {
        x: Var,
        arg: Vec<u32>,
    },
    Resize(Var),
    Max {
        parts: Vec<Var>,
        winner: Vec<u8>,
    },
}

impl Var {
    pub fn leaf(value: Planes) -> Self {
        Var(Rc::new(Node { value, op: Op::Leaf }))
    }

    pub fn value(&self) -> &Planes {
        &self.0.value
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        self.0.value.shape()
    }

    fn key(&self) -> *const Node {
        Rc::as_ptr(&self.0)
    }

    fn parents(&self) -> Vec<&Var> {
        match &self.0.op {
            Op::Leaf => vec![],
            Op::Conv { x, .. } | Op::Relu(x) | Op::GroupNorm { x, .. } | Op::MaxPool { x, .. } | Op::Resize(x) => {
                vec![x]
            }
            Op::Add(a, b) => vec![a, b],
            Op::Concat(v) | Op::Max { parts: v, .. } => v.iter().collect(),
        }
    }
}

impl std::fmt::Debug for Var {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Var{:?}", self.shape())
    }
}

enum Store<'a> {
    Frozen(&'a ParamStore),
    /// Parameters are created on first use; numeric work is skipped and
    /// every op yields zeros of the right shape.
    Building(RefCell<ParamStore>, u64),
    /// As `Building`, with every parameter left at zero.
    Shapes(RefCell<ParamStore>),
}

/// One entry of a layer-shape trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEntry {
    pub name: String,
    pub shape: (usize, usize, usize),
}

pub struct Ctx<'a> {
    store: Store<'a>,
    record: bool,
    trace: Option<RefCell<Vec<TraceEntry>>>,
}

impl<'a> Ctx<'a> {
    /// Evaluation without a tape.
    pub fn eval(params: &'a ParamStore) -> Self {
        Self {
            store: Store::Frozen(params),
            record: false,
            trace: None,
        }
    }

    /// Evaluation that records a tape for [`backward`].
    pub fn train(params: &'a ParamStore) -> Self {
        Self {
            store: Store::Frozen(params),
            record: true,
            trace: None,
        }
    }

    pub fn building(seed: u64) -> Ctx<'static> {
        Ctx {
            store: Store::Building(RefCell::new(ParamStore::new()), seed),
            record: false,
            trace: None,
        }
    }

    /// Shape propagation only: parameters are declared as zeros.
    pub fn shapes_only() -> Ctx<'static> {
        Ctx {
            store: Store::Shapes(RefCell::new(ParamStore::new())),
            record: false,
            trace: None,
        }
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(RefCell::new(Vec::new()));
        self
    }

    pub fn is_building(&self) -> bool {
        !matches!(self.store, Store::Frozen(_))
    }

    pub fn records(&self) -> bool {
        self.record
    }

    pub fn into_params(self) -> Option<ParamStore> {
        match self.store {
            Store::Building(s, _) | Store::Shapes(s) => Some(s.into_inner()),
            Store::Frozen(_) => None,
        }
    }

    pub fn take_trace(&self) -> Vec<TraceEntry> {
        self.trace.as_ref().map(|t| t.take()).unwrap_or_default()
    }

    pub fn note(&self, name: &str, v: &Var) {
        if let Some(t) = &self.trace {
            t.borrow_mut().push(TraceEntry {
                name: name.to_string(),
                shape: v.shape(),
            });
        }
    }

    fn param(&self, name: &str, shape: Vec<usize>, init: Init) -> ParamId {
        match &self.store {
            Store::Frozen(p) => {
                let id = p.id(name).unwrap_or_else(|| panic!("parameter {name} missing from store"));
                assert_eq!(p.get(id).shape, shape, "parameter {name} has the wrong shape");
                id
            }
            Store::Building(cell, _) | Store::Shapes(cell) => {
                let (init, seed) = match &self.store {
                    Store::Building(_, seed) => (init, *seed),
                    _ => (Init::Const(0.0), 0),
                };
                let mut s = cell.borrow_mut();
                match s.id(name) {
                    Some(id) => {
                        assert_eq!(s.get(id).shape, shape, "parameter {name} redeclared");
                        id
                    }
                    None => s.declare(name, shape, init, seed),
                }
            }
        }
    }

    fn frozen(&self) -> Option<&'a ParamStore> {
        match self.store {
            Store::Frozen(p) => Some(p),
            Store::Building(..) | Store::Shapes(_) => None,
        }
    }

    fn make(&self, value: Planes, op: impl FnOnce() -> Op) -> Var {
        let op = if self.record { op() } else { Op::Leaf };
        Var(Rc::new(Node { value, op }))
    }

    /// Same-padded convolution with bias; weights named `<name>.weight`
    /// and `<name>.bias`.
    pub fn conv(&self, x: &Var, name: &str, cout: usize, geom: ConvGeom) -> Var {
        self.conv_with_gain(x, name, cout, geom, 1.0)
    }

    pub fn conv_with_gain(&self, x: &Var, name: &str, cout: usize, geom: ConvGeom, gain: f64) -> Var {
        let (cin, h, w) = x.shape();
        let fan_in = cin * geom.k * geom.k;
        let wid = self.param(
            &format!("{name}.weight"),
            vec![cout, cin, geom.k, geom.k],
            Init::He { fan_in, gain },
        );
        let bid = self.param(&format!("{name}.bias"), vec![cout], Init::Const(0.0));
        let value = match self.frozen() {
            Some(p) => conv::conv_forward(x.value(), &p.get(wid).data, Some(&p.get(bid).data), cout, geom),
            None => Planes::zeros(cout, geom.out_size(h), geom.out_size(w)),
        };
        let out = self.make(value, || Op::Conv {
            x: x.clone(),
            w: wid,
            b: bid,
            geom,
        });
        self.note(name, &out);
        out
    }

    pub fn relu(&self, x: &Var) -> Var {
        let mut v = x.value().clone();
        v.as_mut_slice().iter_mut().for_each(|a| *a = a.max(0.0));
        self.make(v, || Op::Relu(x.clone()))
    }

    pub fn add(&self, a: &Var, b: &Var) -> Var {
        assert_eq!(a.shape(), b.shape(), "add: shape mismatch");
        let mut v = a.value().clone();
        v.as_mut_slice().iter_mut().zip(b.value().as_slice()).for_each(|(x, y)| *x += y);
        self.make(v, || Op::Add(a.clone(), b.clone()))
    }

    /// Channel concatenation.
    pub fn concat(&self, parts: &[Var]) -> Var {
        let (_, h, w) = parts[0].shape();
        assert!(parts.iter().all(|p| p.shape().1 == h && p.shape().2 == w), "concat: spatial mismatch");
        let c = parts.iter().map(|p| p.shape().0).sum();
        let mut data = Vec::with_capacity(c * h * w);
        for p in parts {
            data.extend_from_slice(p.value().as_slice());
        }
        let v = Planes::from_vec(c, h, w, data).expect("sizes add up");
        self.make(v, || Op::Concat(parts.to_vec()))
    }

    /// Per-sample group normalisation with learned per-channel affine.
    pub fn group_norm(&self, x: &Var, name: &str, groups: usize) -> Var {
        let (c, h, w) = x.shape();
        assert!(c % groups == 0, "{name}: {c} channels not divisible into {groups} groups");
        let gamma = self.param(&format!("{name}.gamma"), vec![c], Init::Const(1.0));
        let beta = self.param(&format!("{name}.beta"), vec![c], Init::Const(0.0));
        let Some(p) = self.frozen() else {
            return self.make(Planes::zeros(c, h, w), || Op::Leaf);
        };
        let (gv, bv) = (&p.get(gamma).data, &p.get(beta).data);
        let per = c / groups * h * w;
        let xs = x.value().as_slice();
        let mut mean = vec![0.0; groups];
        let mut rstd = vec![0.0; groups];
        let mut out = vec![0.0; xs.len()];
        for g in 0..groups {
            let seg = &xs[g * per..(g + 1) * per];
            let m = seg.iter().sum::<f64>() / per as f64;
            let var = seg.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / per as f64;
            let r = 1.0 / (var + GN_EPS).sqrt();
            mean[g] = m;
            rstd[g] = r;
            for (i, v) in seg.iter().enumerate() {
                let ch = (g * per + i) / (h * w);
                out[g * per + i] = gv[ch] * (v - m) * r + bv[ch];
            }
        }
        let v = Planes::from_vec(c, h, w, out).expect("same shape");
        self.make(v, || Op::GroupNorm {
            x: x.clone(),
            gamma,
            beta,
            groups,
            mean,
            rstd,
        })
    }

    pub fn max_pool(&self, x: &Var) -> Var {
        let (y, arg) = conv::max_pool(x.value());
        self.make(y, || Op::MaxPool { x: x.clone(), arg })
    }

    /// Bilinear resampling; identity when the size already matches.
    pub fn resize(&self, x: &Var, h: usize, w: usize) -> Var {
        let (_, xh, xw) = x.shape();
        if (xh, xw) == (h, w) {
            return x.clone();
        }
        self.make(x.value().resized(h, w), || Op::Resize(x.clone()))
    }

    /// Elementwise maximum; ties go to the earliest input.
    pub fn max(&self, parts: &[Var]) -> Var {
        if parts.len() == 1 {
            return parts[0].clone();
        }
        let shape = parts[0].shape();
        assert!(parts.iter().all(|p| p.shape() == shape), "max: shape mismatch");
        let mut v = parts[0].value().clone();
        let mut winner = vec![0u8; v.as_slice().len()];
        for (k, p) in parts.iter().enumerate().skip(1) {
            for ((a, b), wi) in v.as_mut_slice().iter_mut().zip(p.value().as_slice()).zip(&mut winner) {
                if *b > *a {
                    *a = *b;
                    *wi = k as u8;
                }
            }
        }
        self.make(v, || Op::Max {
            parts: parts.to_vec(),
            winner,
        })
    }
}

fn accumulate(map: &mut HashMap<*const Node, Planes>, v: &Var, g: Planes) {
    match map.get_mut(&v.key()) {
        Some(acc) => acc.as_mut_slice().iter_mut().zip(g.as_slice()).for_each(|(a, b)| *a += b),
        None => {
            map.insert(v.key(), g);
        }
    }
}

fn topo_order(seeds: &[Var]) -> Vec<Var> {
    let mut order = Vec::new();
    let mut seen = HashSet::new();
    let mut stack: Vec<(Var, bool)> = seeds.iter().rev().map(|v| (v.clone(), false)).collect();
    while let Some((v, expanded)) = stack.pop() {
        if expanded {
            order.push(v);
            continue;
        }
        if !seen.insert(v.key()) {
            continue;
        }
        stack.push((v.clone(), true));
        for p in v.parents() {
            if !seen.contains(&p.key()) {
                stack.push((p.clone(), false));
            }
        }
    }
    order
}

/// Propagates `d loss / d output` seeds back to the parameters.
pub fn backward(seeds: Vec<(Var, Planes)>, params: &ParamStore) -> Grads {
    let mut grads = Grads::new(params.len());
    let roots: Vec<Var> = seeds.iter().map(|(v, _)| v.clone()).collect();
    let mut map: HashMap<*const Node, Planes> = HashMap::new();
    for (v, g) in seeds {
        assert_eq!(v.shape(), g.shape(), "seed gradient shape mismatch");
        accumulate(&mut map, &v, g);
    }
    for v in topo_order(&roots).into_iter().rev() {
        let Some(g) = map.remove(&v.key()) else { continue };
        match &v.0.op {
            Op::Leaf => {}
            Op::Conv { x, w, b, geom } => {
                let cg = conv::conv_backward(x.value(), &params.get(*w).data, &g, *geom);
                grads.accumulate_owned(*w, cg.dw);
                grads.accumulate_owned(*b, cg.db);
                accumulate(&mut map, x, cg.dx);
            }
            Op::Relu(x) => {
                let mut d = g;
                d.as_mut_slice()
                    .iter_mut()
                    .zip(v.value().as_slice())
                    .for_each(|(d, y)| {
                        if *y <= 0.0 {
                            *d = 0.0
                        }
                    });
                accumulate(&mut map, x, d);
            }
            Op::Add(a, b) => {
                accumulate(&mut map, b, g.clone());
                accumulate(&mut map, a, g);
            }
            Op::Concat(parts) => {
                let mut off = 0;
                for p in parts {
                    let (c, h, w) = p.shape();
                    let n = c * h * w;
                    let d = Planes::from_vec(c, h, w, g.as_slice()[off..off + n].to_vec()).expect("slice");
                    off += n;
                    accumulate(&mut map, p, d);
                }
            }
            Op::GroupNorm {
                x,
                gamma,
                beta,
                groups,
                mean,
                rstd,
            } => {
                let (c, h, w) = x.shape();
                let hw = h * w;
                let per = c / groups * hw;
                let gv = &params.get(*gamma).data;
                let xs = x.value().as_slice();
                let gs = g.as_slice();
                let mut dgamma = vec![0.0; c];
                let mut dbeta = vec![0.0; c];
                let mut dx = vec![0.0; xs.len()];
                for gi in 0..*groups {
                    let (m, r) = (mean[gi], rstd[gi]);
                    let mut sum_d = 0.0;
                    let mut sum_dx = 0.0;
                    for i in gi * per..(gi + 1) * per {
                        let ch = i / hw;
                        let xhat = (xs[i] - m) * r;
                        dgamma[ch] += gs[i] * xhat;
                        dbeta[ch] += gs[i];
                        let dxh = gs[i] * gv[ch];
                        sum_d += dxh;
                        sum_dx += dxh * xhat;
                    }
                    let n = per as f64;
                    for i in gi * per..(gi + 1) * per {
                        let ch = i / hw;
                        let xhat = (xs[i] - m) * r;
                        let dxh = gs[i] * gv[ch];
                        dx[i] = r / n * (n * dxh - sum_d - xhat * sum_dx);
                    }
                }
                grads.accumulate_owned(*gamma, dgamma);
                grads.accumulate_owned(*beta, dbeta);
                accumulate(&mut map, x, Planes::from_vec(c, h, w, dx).expect("same shape"));
            }
            Op::MaxPool { x, arg } => {
                accumulate(&mut map, x, conv::max_pool_backward(&g, arg, x.shape()));
            }
            Op::Resize(x) => {
                let (_, h, w) = x.shape();
                accumulate(&mut map, x, conv::resize_backward(&g, h, w));
            }
            Op::Max { parts, winner } => {
                let (c, h, w) = v.shape();
                let mut ds: Vec<Planes> = parts.iter().map(|_| Planes::zeros(c, h, w)).collect();
                for (i, (&k, gv)) in winner.iter().zip(g.as_slice()).enumerate() {
                    ds[k as usize].as_mut_slice()[i] = *gv;
                }
                for (p, d) in parts.iter().zip(ds) {
                    accumulate(&mut map, p, d);
                }
            }
        }
    }
    grads
}
