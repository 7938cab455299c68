//! Define-by-run tape and the executor abstraction.
//!
//! Layer code is written once against [`Executor`] and runs in two modes:
//! recorded on a [`Tape`] (training, gradients) or immediately on plain
//! tensors (inference, constant memory). A tape is rebuilt per forward
//! pass and never shared between threads.

use std::rc::Rc;

use super::kernels::{self, EmptySegment, Reduce, SoftmaxState};
use super::{Tensor, TensorError};

/// Handle to a tensor recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

enum Op {
    Leaf,
    Matmul { a: usize, b: usize },
    Add { a: usize, b: usize },
    Sub { a: usize, b: usize },
    Mul { a: usize, b: usize },
    MaxElem { a: usize, b: usize },
    Affine { x: usize, mul: f64 },
    Relu { x: usize },
    LeakyRelu { x: usize, slope: f64 },
    Sigmoid { x: usize },
    Abs { x: usize },
    AddBias { x: usize, b: usize },
    ConcatRows { parts: Vec<usize> },
    GatherRows { x: usize, idx: Rc<Vec<usize>> },
    ScaleRows { x: usize, s: usize },
    SegmentSum { x: usize, ids: Rc<Vec<usize>> },
    SegmentMean { x: usize, ids: Rc<Vec<usize>>, counts: Vec<usize> },
    SegmentMax { x: usize, arg: Vec<usize> },
    SegmentSoftmax {
        scores: usize,
        ids: Rc<Vec<usize>>,
        state: SoftmaxState,
        scale_invariant: bool,
    },
    WhereRows { mask: Rc<Vec<bool>>, a: usize, b: usize },
    SumAll { x: usize },
    NormalizeRowsMaxAbs {
        x: usize,
        arg: Vec<usize>,
        signed_max: Vec<f64>,
    },
}

/// Gradient of the loss w.r.t. every tape entry that the loss reaches.
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads[v.0].as_ref()
    }

    /// Gradient of `v`, densified to zeros when the loss never reached it.
    pub fn get_or_zeros(&self, v: Var, shape: &[usize]) -> Tensor {
        match &self.grads[v.0] {
            Some(g) => g.clone(),
            None => Tensor::zeros(shape.to_vec()),
        }
    }
}

/// Ordered record of primitive operations; inputs always precede users.
pub struct Tape {
    ops: Vec<Op>,
    vals: Vec<Tensor>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            ops: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    fn push(&mut self, val: Tensor, op: Op) -> Var {
        self.vals.push(val);
        self.ops.push(op);
        Var(self.vals.len() - 1)
    }

    /// Reverse-topological accumulation from a scalar loss.
    pub fn backward(&self, loss: Var) -> Result<Gradients, TensorError> {
        if self.vals[loss.0].numel() != 1 {
            return Err(TensorError::NonScalarLoss(
                self.vals[loss.0].shape().to_vec(),
            ));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.vals.len()];
        grads[loss.0] = Some(Tensor::full(self.vals[loss.0].shape().to_vec(), 1.0));

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            self.accumulate(i, &g, &mut grads)?;
            grads[i] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn accumulate(
        &self,
        node: usize,
        g: &Tensor,
        grads: &mut [Option<Tensor>],
    ) -> Result<(), TensorError> {
        let add_to = |grads: &mut [Option<Tensor>], target: usize, delta: Tensor| {
            match &mut grads[target] {
                Some(acc) => {
                    for (a, d) in acc.data_mut().iter_mut().zip(delta.data()) {
                        *a += d;
                    }
                }
                slot => *slot = Some(delta),
            }
        };
        match &self.ops[node] {
            Op::Leaf => {}
            Op::Matmul { a, b } => {
                let bt = kernels::transpose(&self.vals[*b]);
                add_to(grads, *a, kernels::matmul(g, &bt)?);
                let at = kernels::transpose(&self.vals[*a]);
                add_to(grads, *b, kernels::matmul(&at, g)?);
            }
            Op::Add { a, b } => {
                add_to(grads, *a, g.clone());
                add_to(grads, *b, g.clone());
            }
            Op::Sub { a, b } => {
                add_to(grads, *a, g.clone());
                add_to(grads, *b, kernels::affine(g, -1.0, 0.0));
            }
            Op::Mul { a, b } => {
                add_to(grads, *a, kernels::mul(g, &self.vals[*b])?);
                add_to(grads, *b, kernels::mul(g, &self.vals[*a])?);
            }
            Op::MaxElem { a, b } => {
                // ties route to the first operand, matching the forward pick
                let (av, bv) = (self.vals[*a].data(), self.vals[*b].data());
                let mut ga = g.clone();
                let mut gb = g.clone();
                for (i, (x, y)) in av.iter().zip(bv).enumerate() {
                    if x >= y {
                        gb.data_mut()[i] = 0.0;
                    } else {
                        ga.data_mut()[i] = 0.0;
                    }
                }
                add_to(grads, *a, ga);
                add_to(grads, *b, gb);
            }
            Op::Affine { x, mul } => add_to(grads, *x, kernels::affine(g, *mul, 0.0)),
            Op::Relu { x } => {
                let xv = self.vals[*x].data();
                let mut gx = g.clone();
                for (gi, xi) in gx.data_mut().iter_mut().zip(xv) {
                    if *xi <= 0.0 {
                        *gi = 0.0;
                    }
                }
                add_to(grads, *x, gx);
            }
            Op::LeakyRelu { x, slope } => {
                let xv = self.vals[*x].data();
                let mut gx = g.clone();
                for (gi, xi) in gx.data_mut().iter_mut().zip(xv) {
                    if *xi <= 0.0 {
                        *gi *= slope;
                    }
                }
                add_to(grads, *x, gx);
            }
            Op::Sigmoid { x } => {
                let yv = self.vals[node].data();
                let mut gx = g.clone();
                for (gi, yi) in gx.data_mut().iter_mut().zip(yv) {
                    *gi *= yi * (1.0 - yi);
                }
                add_to(grads, *x, gx);
            }
            Op::Abs { x } => {
                let xv = self.vals[*x].data();
                let mut gx = g.clone();
                for (gi, xi) in gx.data_mut().iter_mut().zip(xv) {
                    *gi *= if *xi > 0.0 {
                        1.0
                    } else if *xi < 0.0 {
                        -1.0
                    } else {
                        0.0
                    };
                }
                add_to(grads, *x, gx);
            }
            Op::AddBias { x, b } => {
                add_to(grads, *x, g.clone());
                let (r, c) = (g.rows(), g.cols());
                let mut gb = vec![0.0; c];
                for i in 0..r {
                    for j in 0..c {
                        gb[j] += g.data()[i * c + j];
                    }
                }
                add_to(grads, *b, Tensor::matrix(1, c, gb)?);
            }
            Op::ConcatRows { parts } => {
                let n = g.rows();
                let mut off = 0;
                for p in parts {
                    let w = self.vals[*p].cols();
                    let mut gp = vec![0.0; n * w];
                    for i in 0..n {
                        gp[i * w..(i + 1) * w]
                            .copy_from_slice(&g.row(i)[off..off + w]);
                    }
                    add_to(grads, *p, Tensor::matrix(n, w, gp)?);
                    off += w;
                }
            }
            Op::GatherRows { x, idx } => {
                let (n, c) = (self.vals[*x].rows(), self.vals[*x].cols());
                let mut gx = vec![0.0; n * c];
                for (i, &r) in idx.iter().enumerate() {
                    for j in 0..c {
                        gx[r * c + j] += g.data()[i * c + j];
                    }
                }
                add_to(grads, *x, Tensor::matrix(n, c, gx)?);
            }
            Op::ScaleRows { x, s } => {
                let xv = &self.vals[*x];
                let sv = self.vals[*s].data();
                let (n, c) = (xv.rows(), xv.cols());
                let mut gx = g.clone();
                let mut gs = vec![0.0; n];
                for i in 0..n {
                    let grow = &mut gx.data_mut()[i * c..(i + 1) * c];
                    for (j, gj) in grow.iter_mut().enumerate() {
                        gs[i] += *gj * xv.data()[i * c + j];
                        *gj *= sv[i];
                    }
                }
                add_to(grads, *x, gx);
                add_to(
                    grads,
                    *s,
                    Tensor::new(self.vals[*s].shape().to_vec(), gs)?,
                );
            }
            Op::SegmentSum { x, ids } => {
                let (n, c) = (self.vals[*x].rows(), self.vals[*x].cols());
                let mut gx = vec![0.0; n * c];
                for (i, &s) in ids.iter().enumerate() {
                    gx[i * c..(i + 1) * c].copy_from_slice(g.row(s));
                }
                add_to(grads, *x, Tensor::matrix(n, c, gx)?);
            }
            Op::SegmentMean { x, ids, counts } => {
                let (n, c) = (self.vals[*x].rows(), self.vals[*x].cols());
                let mut gx = vec![0.0; n * c];
                for (i, &s) in ids.iter().enumerate() {
                    let inv = 1.0 / counts[s] as f64;
                    for j in 0..c {
                        gx[i * c + j] = g.data()[s * c + j] * inv;
                    }
                }
                add_to(grads, *x, Tensor::matrix(n, c, gx)?);
            }
            Op::SegmentMax { x, arg } => {
                let (n, c) = (self.vals[*x].rows(), self.vals[*x].cols());
                let mut gx = vec![0.0; n * c];
                for (slot, &row) in arg.iter().enumerate() {
                    if row != usize::MAX {
                        let j = slot % c;
                        gx[row * c + j] += g.data()[slot];
                    }
                }
                add_to(grads, *x, Tensor::matrix(n, c, gx)?);
            }
            Op::SegmentSoftmax {
                scores,
                ids,
                state,
                scale_invariant,
            } => {
                let alpha = self.vals[node].data();
                let segments = state.range.len();
                // standard softmax backward w.r.t. normalized scores
                let mut inner = vec![0.0; segments];
                for (i, &s) in ids.iter().enumerate() {
                    inner[s] += alpha[i] * g.data()[i];
                }
                let mut u = vec![0.0; ids.len()];
                for (i, &s) in ids.iter().enumerate() {
                    u[i] = alpha[i] * (g.data()[i] - inner[s]);
                }
                let e = ids.len();
                let mut gs = vec![0.0; e];
                if !*scale_invariant {
                    gs.copy_from_slice(&u);
                } else {
                    // scores enter both the numerator and the range max-min
                    let sv = self.vals[*scores].data();
                    let mut dot = vec![0.0; segments];
                    for (i, &s) in ids.iter().enumerate() {
                        dot[s] += u[i] * sv[i];
                    }
                    for (i, &s) in ids.iter().enumerate() {
                        if state.degenerate[s] {
                            continue; // uniform plateau: zero subgradient
                        }
                        gs[i] += u[i] / state.range[s];
                    }
                    for s in 0..segments {
                        if state.arg_hi[s] == usize::MAX || state.degenerate[s] {
                            continue;
                        }
                        let corr = dot[s] / (state.range[s] * state.range[s]);
                        gs[state.arg_hi[s]] -= corr;
                        gs[state.arg_lo[s]] += corr;
                    }
                }
                add_to(
                    grads,
                    *scores,
                    Tensor::new(self.vals[*scores].shape().to_vec(), gs)?,
                );
            }
            Op::WhereRows { mask, a, b } => {
                let c = g.cols();
                let mut ga = Tensor::zeros(g.shape().to_vec());
                let mut gb = Tensor::zeros(g.shape().to_vec());
                for (i, &keep_a) in mask.iter().enumerate() {
                    let dst = if keep_a { &mut ga } else { &mut gb };
                    dst.data_mut()[i * c..(i + 1) * c].copy_from_slice(g.row(i));
                }
                add_to(grads, *a, ga);
                add_to(grads, *b, gb);
            }
            Op::SumAll { x } => {
                let gv = g.item();
                add_to(
                    grads,
                    *x,
                    Tensor::full(self.vals[*x].shape().to_vec(), gv),
                );
            }
            Op::NormalizeRowsMaxAbs { x, arg, signed_max } => {
                // y_ij = x_ij / m_i with m_i = |x_{i,a}|:
                // d/dx_ik = g_ik/m - [k==a] sign(x_a)/m^2 * sum_j g_ij x_ij
                let xv = &self.vals[*x];
                let (r, c) = (xv.rows(), xv.cols());
                let mut gx = vec![0.0; r * c];
                for i in 0..r {
                    let a = arg[i];
                    if a == usize::MAX {
                        continue; // all-zero row: zero subgradient
                    }
                    let m = signed_max[i].abs();
                    let sign = signed_max[i].signum();
                    let mut dot = 0.0;
                    for j in 0..c {
                        dot += g.data()[i * c + j] * xv.data()[i * c + j];
                    }
                    for j in 0..c {
                        gx[i * c + j] = g.data()[i * c + j] / m;
                    }
                    gx[i * c + a] -= sign * dot / (m * m);
                }
                add_to(grads, *x, Tensor::matrix(r, c, gx)?);
            }
        }
        Ok(())
    }
}

/// One set of tensor primitives, runnable recorded or immediate.
pub trait Executor {
    type V: Clone;

    fn leaf(&mut self, t: Tensor) -> Self::V;
    fn value<'a>(&'a self, v: &'a Self::V) -> &'a Tensor;

    fn matmul(&mut self, a: &Self::V, b: &Self::V) -> Result<Self::V, TensorError>;
    fn add(&mut self, a: &Self::V, b: &Self::V) -> Result<Self::V, TensorError>;
    fn sub(&mut self, a: &Self::V, b: &Self::V) -> Result<Self::V, TensorError>;
    fn mul(&mut self, a: &Self::V, b: &Self::V) -> Result<Self::V, TensorError>;
    fn max_elem(&mut self, a: &Self::V, b: &Self::V) -> Result<Self::V, TensorError>;
    fn affine(&mut self, x: &Self::V, mul: f64, add: f64) -> Self::V;
    fn relu(&mut self, x: &Self::V) -> Self::V;
    fn leaky_relu(&mut self, x: &Self::V, slope: f64) -> Self::V;
    fn sigmoid(&mut self, x: &Self::V) -> Self::V;
    fn abs(&mut self, x: &Self::V) -> Self::V;
    fn add_bias(&mut self, x: &Self::V, b: &Self::V) -> Result<Self::V, TensorError>;
    fn concat_rows(&mut self, parts: &[&Self::V]) -> Result<Self::V, TensorError>;
    fn gather_rows(&mut self, x: &Self::V, idx: &Rc<Vec<usize>>)
        -> Result<Self::V, TensorError>;
    fn scale_rows(&mut self, x: &Self::V, s: &Self::V) -> Result<Self::V, TensorError>;
    fn segment_reduce(
        &mut self,
        x: &Self::V,
        ids: &Rc<Vec<usize>>,
        segments: usize,
        mode: Reduce,
        empty: EmptySegment,
    ) -> Result<Self::V, TensorError>;
    fn segment_softmax(
        &mut self,
        scores: &Self::V,
        ids: &Rc<Vec<usize>>,
        segments: usize,
        scale_invariant: bool,
    ) -> Result<Self::V, TensorError>;
    fn where_rows(
        &mut self,
        mask: &Rc<Vec<bool>>,
        a: &Self::V,
        b: &Self::V,
    ) -> Result<Self::V, TensorError>;
    fn sum_all(&mut self, x: &Self::V) -> Self::V;
    /// Divide each row by its largest-magnitude entry (zero rows pass
    /// through), making rows invariant under positive scaling.
    fn normalize_rows_maxabs(&mut self, x: &Self::V) -> Self::V;
}

impl Executor for Tape {
    type V = Var;

    fn leaf(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf)
    }

    fn value<'a>(&'a self, v: &'a Var) -> &'a Tensor {
        &self.vals[v.0]
    }

    fn matmul(&mut self, a: &Var, b: &Var) -> Result<Var, TensorError> {
        let out = kernels::matmul(&self.vals[a.0], &self.vals[b.0])?;
        Ok(self.push(out, Op::Matmul { a: a.0, b: b.0 }))
    }

    fn add(&mut self, a: &Var, b: &Var) -> Result<Var, TensorError> {
        let out = kernels::add(&self.vals[a.0], &self.vals[b.0])?;
        Ok(self.push(out, Op::Add { a: a.0, b: b.0 }))
    }

    fn sub(&mut self, a: &Var, b: &Var) -> Result<Var, TensorError> {
        let out = kernels::sub(&self.vals[a.0], &self.vals[b.0])?;
        Ok(self.push(out, Op::Sub { a: a.0, b: b.0 }))
    }

    fn mul(&mut self, a: &Var, b: &Var) -> Result<Var, TensorError> {
        let out = kernels::mul(&self.vals[a.0], &self.vals[b.0])?;
        Ok(self.push(out, Op::Mul { a: a.0, b: b.0 }))
    }

    fn max_elem(&mut self, a: &Var, b: &Var) -> Result<Var, TensorError> {
        let out = kernels::max_elem(&self.vals[a.0], &self.vals[b.0])?;
        Ok(self.push(out, Op::MaxElem { a: a.0, b: b.0 }))
    }

    fn affine(&mut self, x: &Var, mul: f64, add: f64) -> Var {
        let out = kernels::affine(&self.vals[x.0], mul, add);
        self.push(out, Op::Affine { x: x.0, mul })
    }

    fn relu(&mut self, x: &Var) -> Var {
        let out = kernels::relu(&self.vals[x.0]);
        self.push(out, Op::Relu { x: x.0 })
    }

    fn leaky_relu(&mut self, x: &Var, slope: f64) -> Var {
        let out = kernels::leaky_relu(&self.vals[x.0], slope);
        self.push(out, Op::LeakyRelu { x: x.0, slope })
    }

    fn sigmoid(&mut self, x: &Var) -> Var {
        let out = kernels::sigmoid(&self.vals[x.0]);
        self.push(out, Op::Sigmoid { x: x.0 })
    }

    fn abs(&mut self, x: &Var) -> Var {
        let out = kernels::abs(&self.vals[x.0]);
        self.push(out, Op::Abs { x: x.0 })
    }

    fn add_bias(&mut self, x: &Var, b: &Var) -> Result<Var, TensorError> {
        let out = kernels::add_bias(&self.vals[x.0], &self.vals[b.0])?;
        Ok(self.push(out, Op::AddBias { x: x.0, b: b.0 }))
    }

    fn concat_rows(&mut self, parts: &[&Var]) -> Result<Var, TensorError> {
        let tensors: Vec<&Tensor> = parts.iter().map(|v| &self.vals[v.0]).collect();
        let out = kernels::concat_rows(&tensors)?;
        Ok(self.push(
            out,
            Op::ConcatRows {
                parts: parts.iter().map(|v| v.0).collect(),
            },
        ))
    }

    fn gather_rows(&mut self, x: &Var, idx: &Rc<Vec<usize>>) -> Result<Var, TensorError> {
        let out = kernels::gather_rows(&self.vals[x.0], idx)?;
        Ok(self.push(
            out,
            Op::GatherRows {
                x: x.0,
                idx: Rc::clone(idx),
            },
        ))
    }

    fn scale_rows(&mut self, x: &Var, s: &Var) -> Result<Var, TensorError> {
        let out = kernels::scale_rows(&self.vals[x.0], &self.vals[s.0])?;
        Ok(self.push(out, Op::ScaleRows { x: x.0, s: s.0 }))
    }

    fn segment_reduce(
        &mut self,
        x: &Var,
        ids: &Rc<Vec<usize>>,
        segments: usize,
        mode: Reduce,
        empty: EmptySegment,
    ) -> Result<Var, TensorError> {
        let (out, arg) = kernels::segment_reduce(&self.vals[x.0], ids, segments, mode, empty)?;
        let op = match mode {
            Reduce::Sum => Op::SegmentSum {
                x: x.0,
                ids: Rc::clone(ids),
            },
            Reduce::Mean => {
                let mut counts = vec![0usize; segments];
                for &s in ids.iter() {
                    counts[s] += 1;
                }
                for c in &mut counts {
                    *c = (*c).max(1); // empty segments got a fill; no grad flows
                }
                Op::SegmentMean {
                    x: x.0,
                    ids: Rc::clone(ids),
                    counts,
                }
            }
            Reduce::Max => Op::SegmentMax {
                x: x.0,
                arg: arg.expect("max reduce returns arg indices"),
            },
        };
        Ok(self.push(out, op))
    }

    fn segment_softmax(
        &mut self,
        scores: &Var,
        ids: &Rc<Vec<usize>>,
        segments: usize,
        scale_invariant: bool,
    ) -> Result<Var, TensorError> {
        let (out, state) =
            kernels::segment_softmax(&self.vals[scores.0], ids, segments, scale_invariant)?;
        Ok(self.push(
            out,
            Op::SegmentSoftmax {
                scores: scores.0,
                ids: Rc::clone(ids),
                state,
                scale_invariant,
            },
        ))
    }

    fn where_rows(
        &mut self,
        mask: &Rc<Vec<bool>>,
        a: &Var,
        b: &Var,
    ) -> Result<Var, TensorError> {
        let out = kernels::where_rows(mask, &self.vals[a.0], &self.vals[b.0])?;
        Ok(self.push(
            out,
            Op::WhereRows {
                mask: Rc::clone(mask),
                a: a.0,
                b: b.0,
            },
        ))
    }

    fn sum_all(&mut self, x: &Var) -> Var {
        let out = kernels::sum_all(&self.vals[x.0]);
        self.push(out, Op::SumAll { x: x.0 })
    }

    fn normalize_rows_maxabs(&mut self, x: &Var) -> Var {
        let (out, arg, signed_max) = kernels::normalize_rows_maxabs(&self.vals[x.0]);
        self.push(
            out,
            Op::NormalizeRowsMaxAbs {
                x: x.0,
                arg,
                signed_max,
            },
        )
    }
}

/// Executes primitives eagerly on owned tensors; nothing is recorded, so
/// intermediate states free as soon as their handles drop.
#[derive(Debug, Default)]
pub struct Immediate;

impl Executor for Immediate {
    type V = Tensor;

    fn leaf(&mut self, t: Tensor) -> Tensor {
        t
    }

    fn value<'a>(&'a self, v: &'a Tensor) -> &'a Tensor {
        v
    }

    fn matmul(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor, TensorError> {
        kernels::matmul(a, b)
    }

    fn add(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor, TensorError> {
        kernels::add(a, b)
    }

    fn sub(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor, TensorError> {
        kernels::sub(a, b)
    }

    fn mul(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor, TensorError> {
        kernels::mul(a, b)
    }

    fn max_elem(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor, TensorError> {
        kernels::max_elem(a, b)
    }

    fn affine(&mut self, x: &Tensor, mul: f64, add: f64) -> Tensor {
        kernels::affine(x, mul, add)
    }

    fn relu(&mut self, x: &Tensor) -> Tensor {
        kernels::relu(x)
    }

    fn leaky_relu(&mut self, x: &Tensor, slope: f64) -> Tensor {
        kernels::leaky_relu(x, slope)
    }

    fn sigmoid(&mut self, x: &Tensor) -> Tensor {
        kernels::sigmoid(x)
    }

    fn abs(&mut self, x: &Tensor) -> Tensor {
        kernels::abs(x)
    }

    fn add_bias(&mut self, x: &Tensor, b: &Tensor) -> Result<Tensor, TensorError> {
        kernels::add_bias(x, b)
    }

    fn concat_rows(&mut self, parts: &[&Tensor]) -> Result<Tensor, TensorError> {
        kernels::concat_rows(parts)
    }

    fn gather_rows(&mut self, x: &Tensor, idx: &Rc<Vec<usize>>) -> Result<Tensor, TensorError> {
        kernels::gather_rows(x, idx)
    }

    fn scale_rows(&mut self, x: &Tensor, s: &Tensor) -> Result<Tensor, TensorError> {
        kernels::scale_rows(x, s)
    }

    fn segment_reduce(
        &mut self,
        x: &Tensor,
        ids: &Rc<Vec<usize>>,
        segments: usize,
        mode: Reduce,
        empty: EmptySegment,
    ) -> Result<Tensor, TensorError> {
        kernels::segment_reduce(x, ids, segments, mode, empty).map(|(t, _)| t)
    }

    fn segment_softmax(
        &mut self,
        scores: &Tensor,
        ids: &Rc<Vec<usize>>,
        segments: usize,
        scale_invariant: bool,
    ) -> Result<Tensor, TensorError> {
        kernels::segment_softmax(scores, ids, segments, scale_invariant).map(|(t, _)| t)
    }

    fn where_rows(
        &mut self,
        mask: &Rc<Vec<bool>>,
        a: &Tensor,
        b: &Tensor,
    ) -> Result<Tensor, TensorError> {
        kernels::where_rows(mask, a, b)
    }

    fn sum_all(&mut self, x: &Tensor) -> Tensor {
        kernels::sum_all(x)
    }

    fn normalize_rows_maxabs(&mut self, x: &Tensor) -> Tensor {
        kernels::normalize_rows_maxabs(x).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backward_of_sum_of_squares() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::column(vec![1.0, 2.0]));
        let sq = tape.mul(&x, &x).unwrap();
        let loss = tape.sum_all(&sq);
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads.get(x).unwrap().data(), &[2.0, 4.0]);
    }

    #[test]
    fn unreached_leaf_has_zero_gradient() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::scalar(3.0));
        let p = tape.leaf(Tensor::scalar(5.0));
        let loss = tape.mul(&x, &x).unwrap();
        let grads = tape.backward(loss).unwrap();
        assert!(grads.get(p).is_none());
        assert_eq!(grads.get_or_zeros(p, &[1]).data(), &[0.0]);
    }

    #[test]
    fn non_scalar_loss_is_rejected() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::column(vec![1.0, 2.0]));
        let y = tape.relu(&x);
        assert!(matches!(
            tape.backward(y),
            Err(TensorError::NonScalarLoss(_))
        ));
    }

    #[test]
    fn segment_max_gradient_goes_to_first_maximizer() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::column(vec![5.0, 5.0, 1.0]));
        let ids = Rc::new(vec![0usize, 0, 0]);
        let m = tape
            .segment_reduce(&x, &ids, 1, Reduce::Max, EmptySegment::Error)
            .unwrap();
        let loss = tape.sum_all(&m);
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads.get(x).unwrap().data(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn immediate_matches_tape_forward() {
        let mut tape = Tape::new();
        let mut im = Immediate;
        let data = Tensor::matrix(2, 2, vec![0.5, -1.0, 2.0, 0.0]).unwrap();
        let a = tape.leaf(data.clone());
        let b = im.leaf(data);
        let ta = tape.sigmoid(&a);
        let tb = im.sigmoid(&b);
        assert_eq!(tape.value(&ta).data(), tb.data());
    }
}
