//! Tape-based reverse-mode differentiation over rank-2 tensors.
//!
//! A [`Graph`] records every operation of one forward pass. Parameters are
//! copied in from a [`ParamStore`] as leaves; after [`Graph::backward`] the
//! resulting [`Gradients`] are accumulated back into the store.
//!
//! Shape errors while building a graph are programming errors and panic,
//! the way indexing does. Public entry points that take user data validate
//! shapes before they reach the graph.

use ndarray::linalg::general_mat_mul;
use ndarray::ArrayView2;

use crate::error::{invalid, Result};
use crate::functional::{log_sum_exp, softmax_into, sparsemax_into};
use crate::param::{ParamId, ParamStore};
use crate::tensor::Tensor;

pub const BATCH_NORM_EPS: f64 = 1e-5;

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    Param(ParamId),
    MatMul(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    MulRow(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Tanh(Var),
    Relu(Var),
    Sigmoid(Var),
    Exp(Var),
    Log(Var),
    Clamp(Var, f64, f64),
    SoftmaxRows(Var),
    SparsemaxRows(Var),
    BatchNorm {
        input: Var,
        mean: Vec<f64>,
        var: Vec<f64>,
        inv_std: Vec<f64>,
    },
    Max(Vec<Var>),
    Sum(Var),
    Mean(Var),
    SliceCols(Var, usize),
    ListwiseCe(Var, Vec<f64>),
    RowEntropy(Var),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

/// `out = beta * out + op(a) · op(b)` where `op` optionally transposes.
fn gemm(a: &Tensor, ta: bool, b: &Tensor, tb: bool, out: &mut Tensor, beta: f64) {
    let av = ArrayView2::from_shape((a.rows(), a.cols()), a.data()).unwrap();
    let bv = ArrayView2::from_shape((b.rows(), b.cols()), b.data()).unwrap();
    let av = if ta { av.reversed_axes() } else { av };
    let bv = if tb { bv.reversed_axes() } else { bv };
    let (r, c) = (out.rows(), out.cols());
    let mut ov = ndarray::ArrayViewMut2::from_shape((r, c), out.data_mut()).unwrap();
    general_mat_mul(1.0, &av, &bv, beta, &mut ov);
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn unary(&mut self, a: Var, value: Tensor, op: Op) -> Var {
        let rg = self.nodes[a.0].requires_grad;
        self.push(value, op, rg)
    }

    fn binary(&mut self, a: Var, b: Var, value: Tensor, op: Op) -> Var {
        let rg = self.nodes[a.0].requires_grad || self.nodes[b.0].requires_grad;
        self.push(value, op, rg)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// A leaf that receives a gradient.
    pub fn input(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// A leaf that is treated as a constant.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        let p = store.get(id);
        let rg = p.trainable;
        self.push(p.value.clone(), Op::Param(id), rg)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (av, bv) = (self.value(a), self.value(b));
        assert_eq!(
            av.cols(),
            bv.rows(),
            "matmul {:?} x {:?}",
            av.shape(),
            bv.shape()
        );
        let mut out = Tensor::zeros(av.rows(), bv.cols());
        gemm(av, false, bv, false, &mut out, 0.0);
        self.binary(a, b, out, Op::MatMul(a, b))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let out = self.value(a).transpose();
        self.unary(a, out, Op::Transpose(a))
    }

    fn zip_same(&self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Tensor {
        let (av, bv) = (self.value(a), self.value(b));
        assert_eq!(av.shape(), bv.shape(), "elementwise shape mismatch");
        let data = av.data().iter().zip(bv.data()).map(|(&x, &y)| f(x, y)).collect();
        Tensor::new(av.shape().to_vec(), data).unwrap()
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let out = self.zip_same(a, b, |x, y| x + y);
        self.binary(a, b, out, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let out = self.zip_same(a, b, |x, y| x - y);
        self.binary(a, b, out, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let out = self.zip_same(a, b, |x, y| x * y);
        self.binary(a, b, out, Op::Mul(a, b))
    }

    fn zip_row(&self, a: Var, row: Var, f: impl Fn(f64, f64) -> f64) -> Tensor {
        let (av, rv) = (self.value(a), self.value(row));
        assert_eq!(rv.rows(), 1, "row operand must have one row");
        assert_eq!(av.cols(), rv.cols(), "row operand width mismatch");
        let c = av.cols();
        let data = av
            .data()
            .iter()
            .enumerate()
            .map(|(i, &x)| f(x, rv.data()[i % c]))
            .collect();
        Tensor::new(av.shape().to_vec(), data).unwrap()
    }

    /// Adds a `[1, c]` row to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let out = self.zip_row(a, row, |x, y| x + y);
        self.binary(a, row, out, Op::AddRow(a, row))
    }

    /// Multiplies every row of `a` elementwise by a `[1, c]` row.
    pub fn mul_row(&mut self, a: Var, row: Var) -> Var {
        let out = self.zip_row(a, row, |x, y| x * y);
        self.binary(a, row, out, Op::MulRow(a, row))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let out = self.value(a).map(|x| x * c);
        self.unary(a, out, Op::Scale(a, c))
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Var {
        let out = self.value(a).map(|x| x + c);
        self.unary(a, out, Op::AddScalar(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.value(a).map(f64::tanh);
        self.unary(a, out, Op::Tanh(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| x.max(0.0));
        self.unary(a, out, Op::Relu(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).map(sigmoid);
        self.unary(a, out, Op::Sigmoid(a))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let out = self.value(a).map(f64::exp);
        self.unary(a, out, Op::Exp(a))
    }

    pub fn log(&mut self, a: Var) -> Var {
        let out = self.value(a).map(f64::ln);
        self.unary(a, out, Op::Log(a))
    }

    /// Clamps into `[lo, hi]`; the gradient is passed only inside the range.
    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Var {
        let out = self.value(a).map(|x| x.clamp(lo, hi));
        self.unary(a, out, Op::Clamp(a, lo, hi))
    }

    fn map_rows(&self, a: Var, f: impl Fn(&[f64], &mut [f64])) -> Tensor {
        let av = self.value(a);
        let mut out = Tensor::zeros_like(av);
        let c = av.cols();
        if c > 0 {
            for (src, dst) in av.data().chunks(c).zip(out.data_mut().chunks_mut(c)) {
                f(src, dst);
            }
        }
        out
    }

    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let out = self.map_rows(a, softmax_into);
        self.unary(a, out, Op::SoftmaxRows(a))
    }

    pub fn sparsemax_rows(&mut self, a: Var) -> Var {
        let out = self.map_rows(a, sparsemax_into);
        self.unary(a, out, Op::SparsemaxRows(a))
    }

    /// Standardizes each column over the rows (batch statistics, biased
    /// variance). Use [`Graph::batch_stats`] to read the statistics back.
    pub fn batch_norm(&mut self, a: Var, eps: f64) -> Var {
        let av = self.value(a);
        let (n, c) = (av.rows(), av.cols());
        let mut mean = vec![0.0; c];
        let mut var = vec![0.0; c];
        for row in av.data().chunks(c) {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        for row in av.data().chunks(c) {
            for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        var.iter_mut().for_each(|v| *v /= n as f64);
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
        let data = av
            .data()
            .iter()
            .enumerate()
            .map(|(i, x)| (x - mean[i % c]) * inv_std[i % c])
            .collect();
        let out = Tensor::matrix(n, c, data).unwrap();
        self.unary(
            a,
            out,
            Op::BatchNorm {
                input: a,
                mean,
                var,
                inv_std,
            },
        )
    }

    /// Batch mean and variance recorded by a [`Graph::batch_norm`] node.
    pub fn batch_stats(&self, v: Var) -> Option<(&[f64], &[f64])> {
        match &self.nodes[v.0].op {
            Op::BatchNorm { mean, var, .. } => Some((mean, var)),
            _ => None,
        }
    }

    /// Elementwise maximum over same-shaped operands. The gradient goes to
    /// the first operand attaining the maximum.
    pub fn max(&mut self, vars: &[Var]) -> Var {
        assert!(!vars.is_empty(), "max over no operands");
        let mut out = self.value(vars[0]).clone();
        for &v in &vars[1..] {
            let vv = self.value(v);
            assert_eq!(vv.shape(), out.shape(), "max shape mismatch");
            for (o, &x) in out.data_mut().iter_mut().zip(vv.data()) {
                if x > *o {
                    *o = x;
                }
            }
        }
        let rg = vars.iter().any(|v| self.nodes[v.0].requires_grad);
        self.push(out, Op::Max(vars.to_vec()), rg)
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let out = Tensor::scalar(self.value(a).data().iter().sum());
        self.unary(a, out, Op::Sum(a))
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let av = self.value(a);
        let out = Tensor::scalar(av.data().iter().sum::<f64>() / av.len() as f64);
        self.unary(a, out, Op::Mean(a))
    }

    /// Columns `start..end`.
    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Var {
        let av = self.value(a);
        assert!(start <= end && end <= av.cols(), "slice {start}..{end} of {:?}", av.shape());
        let w = end - start;
        let mut data = Vec::with_capacity(av.rows() * w);
        for r in 0..av.rows() {
            data.extend_from_slice(&av.row_slice(r)[start..end]);
        }
        let out = Tensor::matrix(av.rows(), w, data).unwrap();
        self.unary(a, out, Op::SliceCols(a, start))
    }

    /// Listwise softmax cross-entropy `-(1/N) Σ y_i log softmax(s)_i` over a
    /// single query, with `scores` of shape `[N, 1]` or `[1, N]`.
    pub fn listwise_ce(&mut self, scores: Var, labels: &[f64]) -> Var {
        let s = self.value(scores);
        assert_eq!(s.len(), labels.len(), "scores/labels length mismatch");
        assert!(!labels.is_empty(), "listwise loss of empty list");
        let lse = log_sum_exp(s.data());
        let n = labels.len() as f64;
        let loss = -s
            .data()
            .iter()
            .zip(labels)
            .map(|(si, yi)| yi * (si - lse))
            .sum::<f64>()
            / n;
        self.unary(scores, Tensor::scalar(loss), Op::ListwiseCe(scores, labels.to_vec()))
    }

    /// Mean over rows of the Shannon entropy `-Σ a ln a` of each row, with
    /// `0 ln 0 = 0`.
    pub fn row_entropy(&mut self, a: Var) -> Var {
        let av = self.value(a);
        let total: f64 = av
            .data()
            .iter()
            .filter(|&&x| x > 0.0)
            .map(|&x| -x * x.ln())
            .sum();
        let out = Tensor::scalar(total / av.rows() as f64);
        self.unary(a, out, Op::RowEntropy(a))
    }

    // Composites.

    /// `x · w + b` with `w: [in, out]` and `b: [1, out]`.
    pub fn affine(&mut self, x: Var, w: Var, b: Var) -> Var {
        let h = self.matmul(x, w);
        self.add_row(h, b)
    }

    /// Row-wise Gumbel-softmax: `softmax((logits + gumbel) / tau)`.
    pub fn concrete(&mut self, logits: Var, gumbel: Tensor, tau: f64) -> Var {
        let g = self.constant(gumbel);
        let z = self.add(logits, g);
        let z = self.scale(z, 1.0 / tau);
        self.softmax_rows(z)
    }

    /// Gated linear unit over the two column halves.
    pub fn glu(&mut self, a: Var) -> Var {
        let c = self.value(a).cols();
        assert!(c % 2 == 0, "glu needs an even width");
        let lin = self.slice_cols(a, 0, c / 2);
        let gate = self.slice_cols(a, c / 2, c);
        let gate = self.sigmoid(gate);
        self.mul(lin, gate)
    }

    pub fn mse(&mut self, a: Var, b: Var) -> Var {
        let d = self.sub(a, b);
        let sq = self.mul(d, d);
        self.mean(sq)
    }

    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lv = self.value(loss);
        if lv.len() != 1 {
            return Err(invalid(format!(
                "backward needs a scalar, got shape {:?}",
                lv.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Tensor::new(lv.shape().to_vec(), vec![1.0]).unwrap());
        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            let Some(gy) = grads[i].take() else { continue };
            self.propagate(node, &gy, &mut grads);
            grads[i] = Some(gy);
        }
        Ok(Gradients { grads })
    }

    fn accumulate(&self, grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
        if !self.nodes[v.0].requires_grad {
            return;
        }
        match &mut grads[v.0] {
            Some(existing) => existing.add_assign(&g),
            slot => *slot = Some(g),
        }
    }

    fn propagate(&self, node: &Node, gy: &Tensor, grads: &mut [Option<Tensor>]) {
        let y = &node.value;
        let needs = |v: Var| self.nodes[v.0].requires_grad;
        let elementwise = |f: &dyn Fn(usize, f64) -> f64| {
            let data = gy.data().iter().enumerate().map(|(i, &g)| f(i, g)).collect();
            Tensor::new(gy.shape().to_vec(), data).unwrap()
        };
        match &node.op {
            Op::Leaf | Op::Param(_) => {}
            &Op::MatMul(a, b) => {
                let (av, bv) = (self.value(a), self.value(b));
                if needs(a) {
                    let mut ga = Tensor::zeros_like(av);
                    gemm(gy, false, bv, true, &mut ga, 0.0);
                    self.accumulate(grads, a, ga);
                }
                if needs(b) {
                    let mut gb = Tensor::zeros_like(bv);
                    gemm(av, true, gy, false, &mut gb, 0.0);
                    self.accumulate(grads, b, gb);
                }
            }
            &Op::Transpose(a) => self.accumulate(grads, a, gy.transpose()),
            &Op::Add(a, b) => {
                self.accumulate(grads, a, gy.clone());
                self.accumulate(grads, b, gy.clone());
            }
            &Op::Sub(a, b) => {
                self.accumulate(grads, a, gy.clone());
                self.accumulate(grads, b, gy.map(|g| -g));
            }
            &Op::Mul(a, b) => {
                let (av, bv) = (self.value(a).data(), self.value(b).data());
                if needs(a) {
                    self.accumulate(grads, a, elementwise(&|i, g| g * bv[i]));
                }
                if needs(b) {
                    self.accumulate(grads, b, elementwise(&|i, g| g * av[i]));
                }
            }
            &Op::AddRow(a, r) => {
                self.accumulate(grads, a, gy.clone());
                if needs(r) {
                    self.accumulate(grads, r, column_sums(gy, |_, g| g));
                }
            }
            &Op::MulRow(a, r) => {
                let rv = self.value(r).data();
                let c = rv.len();
                if needs(a) {
                    self.accumulate(grads, a, elementwise(&|i, g| g * rv[i % c]));
                }
                if needs(r) {
                    let av = self.value(a).data();
                    self.accumulate(grads, r, column_sums(gy, |i, g| g * av[i]));
                }
            }
            &Op::Scale(a, c) => self.accumulate(grads, a, gy.map(|g| g * c)),
            &Op::AddScalar(a) => self.accumulate(grads, a, gy.clone()),
            &Op::Tanh(a) => {
                let yv = y.data();
                self.accumulate(grads, a, elementwise(&|i, g| g * (1.0 - yv[i] * yv[i])));
            }
            &Op::Relu(a) => {
                let xv = self.value(a).data();
                self.accumulate(
                    grads,
                    a,
                    elementwise(&|i, g| if xv[i] > 0.0 { g } else { 0.0 }),
                );
            }
            &Op::Sigmoid(a) => {
                let yv = y.data();
                self.accumulate(grads, a, elementwise(&|i, g| g * yv[i] * (1.0 - yv[i])));
            }
            &Op::Exp(a) => {
                let yv = y.data();
                self.accumulate(grads, a, elementwise(&|i, g| g * yv[i]));
            }
            &Op::Log(a) => {
                let xv = self.value(a).data();
                self.accumulate(grads, a, elementwise(&|i, g| g / xv[i]));
            }
            &Op::Clamp(a, lo, hi) => {
                let xv = self.value(a).data();
                self.accumulate(
                    grads,
                    a,
                    elementwise(&|i, g| if xv[i] >= lo && xv[i] <= hi { g } else { 0.0 }),
                );
            }
            &Op::SoftmaxRows(a) => {
                let mut gx = Tensor::zeros_like(y);
                let c = y.cols();
                for ((s, dy), dx) in y
                    .data()
                    .chunks(c)
                    .zip(gy.data().chunks(c))
                    .zip(gx.data_mut().chunks_mut(c))
                {
                    let dot: f64 = s.iter().zip(dy).map(|(a, b)| a * b).sum();
                    for j in 0..c {
                        dx[j] = s[j] * (dy[j] - dot);
                    }
                }
                self.accumulate(grads, a, gx);
            }
            &Op::SparsemaxRows(a) => {
                let mut gx = Tensor::zeros_like(y);
                let c = y.cols();
                for ((p, dy), dx) in y
                    .data()
                    .chunks(c)
                    .zip(gy.data().chunks(c))
                    .zip(gx.data_mut().chunks_mut(c))
                {
                    let (mut total, mut support) = (0.0, 0usize);
                    for j in 0..c {
                        if p[j] > 0.0 {
                            total += dy[j];
                            support += 1;
                        }
                    }
                    let mean = total / support.max(1) as f64;
                    for j in 0..c {
                        dx[j] = if p[j] > 0.0 { dy[j] - mean } else { 0.0 };
                    }
                }
                self.accumulate(grads, a, gx);
            }
            Op::BatchNorm { input, inv_std, .. } => {
                let (n, c) = (y.rows(), y.cols());
                let xhat = y.data();
                let mut sum_g = vec![0.0; c];
                let mut sum_gx = vec![0.0; c];
                for (i, &g) in gy.data().iter().enumerate() {
                    sum_g[i % c] += g;
                    sum_gx[i % c] += g * xhat[i];
                }
                let nf = n as f64;
                let gx = elementwise(&|i, g| {
                    let j = i % c;
                    inv_std[j] * (g - sum_g[j] / nf - xhat[i] * sum_gx[j] / nf)
                });
                self.accumulate(grads, *input, gx);
            }
            Op::Max(vars) => {
                let mut taken = vec![false; y.len()];
                for &v in vars {
                    if !needs(v) {
                        // still claims its argmax positions
                        for (i, (&x, &m)) in self.value(v).data().iter().zip(y.data()).enumerate() {
                            if x == m {
                                taken[i] = true;
                            }
                        }
                        continue;
                    }
                    let xv = self.value(v).data();
                    let mut gv = Tensor::zeros_like(y);
                    for i in 0..y.len() {
                        if !taken[i] && xv[i] == y.data()[i] {
                            taken[i] = true;
                            gv.data_mut()[i] = gy.data()[i];
                        }
                    }
                    self.accumulate(grads, v, gv);
                }
            }
            &Op::Sum(a) => {
                let g = gy.item();
                self.accumulate(grads, a, self.value(a).map(|_| g));
            }
            &Op::Mean(a) => {
                let av = self.value(a);
                let g = gy.item() / av.len() as f64;
                self.accumulate(grads, a, av.map(|_| g));
            }
            &Op::SliceCols(a, start) => {
                let av = self.value(a);
                let w = y.cols();
                let mut gx = Tensor::zeros_like(av);
                let c = av.cols();
                for r in 0..av.rows() {
                    gx.data_mut()[r * c + start..r * c + start + w]
                        .copy_from_slice(gy.row_slice(r));
                }
                self.accumulate(grads, a, gx);
            }
            Op::ListwiseCe(scores, labels) => {
                let sv = self.value(*scores);
                let mut sigma = vec![0.0; sv.len()];
                softmax_into(sv.data(), &mut sigma);
                let total: f64 = labels.iter().sum();
                let n = labels.len() as f64;
                let g = gy.item();
                let data = sigma
                    .iter()
                    .zip(labels)
                    .map(|(s, yl)| -g * (yl - s * total) / n)
                    .collect();
                self.accumulate(grads, *scores, Tensor::new(sv.shape().to_vec(), data).unwrap());
            }
            &Op::RowEntropy(a) => {
                let av = self.value(a);
                let g = gy.item() / av.rows() as f64;
                self.accumulate(
                    grads,
                    a,
                    av.map(|x| if x > 0.0 { -g * (x.ln() + 1.0) } else { 0.0 }),
                );
            }
        }
    }
}

fn column_sums(gy: &Tensor, f: impl Fn(usize, f64) -> f64) -> Tensor {
    let c = gy.cols();
    let mut out = vec![0.0; c];
    for (i, &g) in gy.data().iter().enumerate() {
        out[i % c] += f(i, g);
    }
    Tensor::row(out)
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Gradients of one backward pass, indexed by [`Var`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// Adds parameter-leaf gradients into the store's gradient buffers.
    pub fn accumulate_into(&self, graph: &Graph, store: &mut ParamStore) {
        for (i, node) in graph.nodes.iter().enumerate().take(self.grads.len()) {
            if let (Op::Param(id), Some(g)) = (&node.op, &self.grads[i]) {
                store.grad_mut(*id).add_assign(g);
            }
        }
    }
}
