//! Reverse-mode automatic differentiation over [`Tensor`]s.
//!
//! A [`Graph`] is a tape: every operation appends a node holding its forward
//! value, so node indices are already a topological order and `backward`
//! walks them once in reverse. Leaves created with [`Graph::param`] keep a
//! persistent gradient buffer that accumulates across `backward` calls until
//! [`Graph::zero_grad`].
//!
//! Broadcasting is limited to a `1×c` row added over an `r×c` matrix
//! ([`Graph::add_row`]) and a `1×1` scalar multiplying a tensor
//! ([`Graph::scale_by`]).

use serde::{Deserialize, Serialize};

use crate::tensor::{Result, Tensor, TensorError};

pub const LAYER_NORM_EPS: f64 = 1e-5;
const NORMALIZE_EPS: f64 = 1e-12;

/// Handle to a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    #[default]
    Gelu,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    ScaleBy(Var, Var),
    Mul(Var, Var),
    MatMul(Var, Var),
    Transpose(Var),
    ConcatRows(Vec<Var>),
    ConcatCols(Vec<Var>),
    SliceRows(Var, usize),
    SliceCols(Var, usize),
    GatherRows(Var, Vec<usize>),
    SoftmaxRows(Var),
    LogSoftmaxRows(Var),
    LayerNorm {
        x: Var,
        gain: Var,
        bias: Var,
        normalized: Tensor,
        inv_std: Vec<f64>,
    },
    Activate(Var, Activation),
    Exp(Var),
    NormalizeRows(Var, Vec<f64>),
    Dot(Var, Var),
    Sum(Var),
    MeanRows(Var),
    RowSums(Var),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
    grad: Option<Tensor>,
}

#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
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

    /// Trainable leaf: receives a gradient on `backward`.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.leaf(value, true)
    }

    /// Detached leaf: never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.leaf(value, false)
    }

    fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad,
            grad: None,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> [usize; 2] {
        self.nodes[v.0].value.shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Accumulated gradient of a leaf. Leaves that `backward` never reached
    /// report zeros.
    pub fn grad(&self, v: Var) -> Tensor {
        let node = &self.nodes[v.0];
        node.grad
            .clone()
            .unwrap_or_else(|| Tensor::zeros(node.value.rows(), node.value.cols()))
    }

    pub fn zero_grad(&mut self) {
        for node in &mut self.nodes {
            node.grad = None;
        }
    }

    fn push(&mut self, value: Tensor, op: Op, inputs: &[Var], name: &'static str) -> Result<Var> {
        if cfg!(debug_assertions) && !value.is_finite() {
            return Err(TensorError::NonFinite { op: name });
        }
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
            grad: None,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).zip_map(self.value(b), "add", |x, y| x + y)?;
        self.push(out, Op::Add(a, b), &[a, b], "add")
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).zip_map(self.value(b), "sub", |x, y| x - y)?;
        self.push(out, Op::Sub(a, b), &[a, b], "sub")
    }

    /// `a (r×c) + row (1×c)`, the row added to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let (av, rv) = (self.value(a), self.value(row));
        if rv.rows() != 1 || rv.cols() != av.cols() {
            return Err(TensorError::ShapeMismatch {
                op: "add_row",
                left: av.shape(),
                right: rv.shape(),
            });
        }
        let mut out = av.clone();
        for r in 0..out.rows() {
            for (o, b) in out.row_mut(r).iter_mut().zip(rv.data()) {
                *o += b;
            }
        }
        self.push(out, Op::AddRow(a, row), &[a, row], "add_row")
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Result<Var> {
        let out = self.value(a).map(|x| x * k);
        self.push(out, Op::Scale(a, k), &[a], "scale")
    }

    /// Multiplies `a` by the `1×1` tensor `s`.
    pub fn scale_by(&mut self, a: Var, s: Var) -> Result<Var> {
        let sv = self.value(s);
        if sv.shape() != [1, 1] {
            return Err(TensorError::ShapeMismatch {
                op: "scale_by",
                left: self.value(a).shape(),
                right: sv.shape(),
            });
        }
        let k = sv.item();
        let out = self.value(a).map(|x| x * k);
        self.push(out, Op::ScaleBy(a, s), &[a, s], "scale_by")
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).zip_map(self.value(b), "mul", |x, y| x * y)?;
        self.push(out, Op::Mul(a, b), &[a, b], "mul")
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(self.value(b))?;
        self.push(out, Op::MatMul(a, b), &[a, b], "matmul")
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).transpose();
        self.push(out, Op::Transpose(a), &[a], "transpose")
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts.first().ok_or(TensorError::Empty { op: "concat_rows" })?;
        let cols = self.value(*first).cols();
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let v = self.value(p);
            if v.cols() != cols {
                return Err(TensorError::ShapeMismatch {
                    op: "concat_rows",
                    left: self.value(*first).shape(),
                    right: v.shape(),
                });
            }
            rows += v.rows();
            data.extend_from_slice(v.data());
        }
        let out = Tensor::new(rows, cols, data)?;
        self.push(out, Op::ConcatRows(parts.to_vec()), parts, "concat_rows")
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts.first().ok_or(TensorError::Empty { op: "concat_cols" })?;
        let rows = self.value(*first).rows();
        for &p in parts {
            if self.value(p).rows() != rows {
                return Err(TensorError::ShapeMismatch {
                    op: "concat_cols",
                    left: self.value(*first).shape(),
                    right: self.value(p).shape(),
                });
            }
        }
        let cols: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for &p in parts {
                data.extend_from_slice(self.value(p).row(r));
            }
        }
        let out = Tensor::new(rows, cols, data)?;
        self.push(out, Op::ConcatCols(parts.to_vec()), parts, "concat_cols")
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let out = self.value(a).slice_rows(start, len)?;
        self.push(out, Op::SliceRows(a, start), &[a], "slice_rows")
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let av = self.value(a);
        if len == 0 || start + len > av.cols() {
            return Err(TensorError::OutOfRange {
                op: "slice_cols",
                index: start + len,
                len: av.cols(),
            });
        }
        let mut data = Vec::with_capacity(av.rows() * len);
        for r in 0..av.rows() {
            data.extend_from_slice(&av.row(r)[start..start + len]);
        }
        let out = Tensor::new(av.rows(), len, data)?;
        self.push(out, Op::SliceCols(a, start), &[a], "slice_cols")
    }

    /// Embedding lookup: output row `k` is `table[indices[k]]`.
    pub fn gather_rows(&mut self, table: Var, indices: &[usize]) -> Result<Var> {
        let tv = self.value(table);
        if indices.is_empty() {
            return Err(TensorError::Empty { op: "gather_rows" });
        }
        let mut data = Vec::with_capacity(indices.len() * tv.cols());
        for &i in indices {
            if i >= tv.rows() {
                return Err(TensorError::OutOfRange {
                    op: "gather_rows",
                    index: i,
                    len: tv.rows(),
                });
            }
            data.extend_from_slice(tv.row(i));
        }
        let out = Tensor::new(indices.len(), tv.cols(), data)?;
        self.push(out, Op::GatherRows(table, indices.to_vec()), &[table], "gather_rows")
    }

    pub fn softmax_rows(&mut self, a: Var) -> Result<Var> {
        let out = softmax_rows(self.value(a))?;
        self.push(out, Op::SoftmaxRows(a), &[a], "softmax_rows")
    }

    pub fn log_softmax_rows(&mut self, a: Var) -> Result<Var> {
        let av = self.value(a);
        let mut out = av.clone();
        for r in 0..out.rows() {
            let row = out.row_mut(r);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            for v in row.iter_mut() {
                *v -= lse;
            }
        }
        self.push(out, Op::LogSoftmaxRows(a), &[a], "log_softmax_rows")
    }

    /// Row-wise layer normalization with `1×c` gain and bias.
    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var) -> Result<Var> {
        let xv = self.value(x);
        let c = xv.cols();
        for p in [gain, bias] {
            if self.value(p).shape() != [1, c] {
                return Err(TensorError::ShapeMismatch {
                    op: "layer_norm",
                    left: xv.shape(),
                    right: self.value(p).shape(),
                });
            }
        }
        let mut normalized = xv.clone();
        let mut inv_std = Vec::with_capacity(xv.rows());
        for r in 0..xv.rows() {
            let row = normalized.row_mut(r);
            let mean = row.iter().sum::<f64>() / c as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / c as f64;
            let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
            for v in row.iter_mut() {
                *v = (*v - mean) * inv;
            }
            inv_std.push(inv);
        }
        let (g, b) = (self.value(gain).data(), self.value(bias).data());
        let mut out = normalized.clone();
        for r in 0..out.rows() {
            for (j, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = *v * g[j] + b[j];
            }
        }
        self.push(
            out,
            Op::LayerNorm {
                x,
                gain,
                bias,
                normalized,
                inv_std,
            },
            &[x, gain, bias],
            "layer_norm",
        )
    }

    pub fn activate(&mut self, a: Var, act: Activation) -> Result<Var> {
        let out = self.value(a).map(|x| activation_value(act, x));
        self.push(out, Op::Activate(a, act), &[a], "activate")
    }

    pub fn exp(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(f64::exp);
        self.push(out, Op::Exp(a), &[a], "exp")
    }

    /// Scales each row to unit L2 norm (a tiny epsilon keeps zero rows finite).
    pub fn normalize_rows(&mut self, a: Var) -> Result<Var> {
        let av = self.value(a);
        let mut out = av.clone();
        let mut norms = Vec::with_capacity(av.rows());
        for r in 0..av.rows() {
            let row = out.row_mut(r);
            let n = (row.iter().map(|v| v * v).sum::<f64>() + NORMALIZE_EPS).sqrt();
            for v in row.iter_mut() {
                *v /= n;
            }
            norms.push(n);
        }
        self.push(out, Op::NormalizeRows(a, norms), &[a], "normalize_rows")
    }

    /// Inner product of two same-shaped tensors, as a `1×1`.
    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        let s: f64 = self
            .value(a)
            .zip_map(self.value(b), "dot", |x, y| x * y)?
            .sum();
        self.push(Tensor::scalar(s), Op::Dot(a, b), &[a, b], "dot")
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let s = self.value(a).sum();
        self.push(Tensor::scalar(s), Op::Sum(a), &[a], "sum")
    }

    /// Mean over rows: `r×c → 1×c`.
    pub fn mean_rows(&mut self, a: Var) -> Result<Var> {
        let av = self.value(a);
        let mut out = av.col_sums();
        out.scale_in_place(1.0 / av.rows() as f64);
        self.push(out, Op::MeanRows(a), &[a], "mean_rows")
    }

    /// Sum within each row: `r×c → r×1`.
    pub fn row_sums(&mut self, a: Var) -> Result<Var> {
        let av = self.value(a);
        let data = (0..av.rows()).map(|r| av.row(r).iter().sum()).collect();
        let out = Tensor::new(av.rows(), 1, data)?;
        self.push(out, Op::RowSums(a), &[a], "row_sums")
    }

    /// Accumulates d(root)/d(leaf) into every trainable leaf.
    pub fn backward(&mut self, root: Var) -> Result<()> {
        let shape = self.shape(root);
        if shape != [1, 1] {
            return Err(TensorError::NonScalarRoot(shape));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; root.0 + 1];
        grads[root.0] = Some(Tensor::scalar(1.0));

        for idx in (0..=root.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            if !self.nodes[idx].requires_grad {
                continue;
            }
            if matches!(self.nodes[idx].op, Op::Leaf) {
                let node = &mut self.nodes[idx];
                match &mut node.grad {
                    Some(acc) => acc.add_assign(&g),
                    None => node.grad = Some(g),
                }
                continue;
            }
            for (input, contribution) in self.local_grads(idx, &g)? {
                if !self.nodes[input.0].requires_grad {
                    continue;
                }
                match &mut grads[input.0] {
                    Some(acc) => acc.add_assign(&contribution),
                    slot @ None => *slot = Some(contribution),
                }
            }
        }
        Ok(())
    }

    fn local_grads(&self, idx: usize, g: &Tensor) -> Result<Vec<(Var, Tensor)>> {
        let out = &self.nodes[idx].value;
        let val = |v: Var| &self.nodes[v.0].value;
        let grads = match &self.nodes[idx].op {
            Op::Leaf => Vec::new(),
            Op::Add(a, b) => vec![(*a, g.clone()), (*b, g.clone())],
            Op::Sub(a, b) => vec![(*a, g.clone()), (*b, g.map(|x| -x))],
            Op::AddRow(a, row) => vec![(*a, g.clone()), (*row, g.col_sums())],
            Op::Scale(a, k) => vec![(*a, g.map(|x| x * k))],
            Op::ScaleBy(a, s) => {
                let k = val(*s).item();
                let ds = g.zip_map(val(*a), "scale_by", |x, y| x * y)?.sum();
                vec![(*a, g.map(|x| x * k)), (*s, Tensor::scalar(ds))]
            }
            Op::Mul(a, b) => vec![
                (*a, g.zip_map(val(*b), "mul", |x, y| x * y)?),
                (*b, g.zip_map(val(*a), "mul", |x, y| x * y)?),
            ],
            Op::MatMul(a, b) => vec![
                (*a, g.matmul(&val(*b).transpose())?),
                (*b, val(*a).transpose().matmul(g)?),
            ],
            Op::Transpose(a) => vec![(*a, g.transpose())],
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                let mut res = Vec::with_capacity(parts.len());
                for &p in parts {
                    let rows = val(p).rows();
                    res.push((p, g.slice_rows(offset, rows)?));
                    offset += rows;
                }
                res
            }
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                let mut res = Vec::with_capacity(parts.len());
                for &p in parts {
                    let cols = val(p).cols();
                    let mut data = Vec::with_capacity(g.rows() * cols);
                    for r in 0..g.rows() {
                        data.extend_from_slice(&g.row(r)[offset..offset + cols]);
                    }
                    res.push((p, Tensor::new(g.rows(), cols, data)?));
                    offset += cols;
                }
                res
            }
            Op::SliceRows(a, start) => {
                let av = val(*a);
                let mut da = Tensor::zeros(av.rows(), av.cols());
                for r in 0..g.rows() {
                    da.row_mut(start + r).copy_from_slice(g.row(r));
                }
                vec![(*a, da)]
            }
            Op::SliceCols(a, start) => {
                let av = val(*a);
                let mut da = Tensor::zeros(av.rows(), av.cols());
                for r in 0..g.rows() {
                    da.row_mut(r)[*start..start + g.cols()].copy_from_slice(g.row(r));
                }
                vec![(*a, da)]
            }
            Op::GatherRows(table, indices) => {
                let tv = val(*table);
                let mut dt = Tensor::zeros(tv.rows(), tv.cols());
                for (k, &i) in indices.iter().enumerate() {
                    for (d, x) in dt.row_mut(i).iter_mut().zip(g.row(k)) {
                        *d += x;
                    }
                }
                vec![(*table, dt)]
            }
            Op::SoftmaxRows(a) => {
                let mut da = g.clone();
                for r in 0..da.rows() {
                    let y = out.row(r);
                    let inner: f64 = g.row(r).iter().zip(y).map(|(x, p)| x * p).sum();
                    for (d, p) in da.row_mut(r).iter_mut().zip(y) {
                        *d = p * (*d - inner);
                    }
                }
                vec![(*a, da)]
            }
            Op::LogSoftmaxRows(a) => {
                let mut da = g.clone();
                for r in 0..da.rows() {
                    let total: f64 = g.row(r).iter().sum();
                    for (d, ly) in da.row_mut(r).iter_mut().zip(out.row(r)) {
                        *d -= ly.exp() * total;
                    }
                }
                vec![(*a, da)]
            }
            Op::LayerNorm {
                x,
                gain,
                bias,
                normalized,
                inv_std,
            } => {
                let gv = val(*gain).data();
                let c = normalized.cols() as f64;
                let mut dx = Tensor::zeros(g.rows(), g.cols());
                let mut dgain = Tensor::zeros(1, g.cols());
                for (r, &istd) in inv_std.iter().enumerate() {
                    let xhat = normalized.row(r);
                    let gr = g.row(r);
                    let dxhat: Vec<f64> = gr.iter().zip(gv).map(|(a, b)| a * b).collect();
                    let sum_dxhat: f64 = dxhat.iter().sum();
                    let sum_dxhat_xhat: f64 = dxhat.iter().zip(xhat).map(|(a, b)| a * b).sum();
                    for (j, d) in dx.row_mut(r).iter_mut().enumerate() {
                        *d = istd / c * (c * dxhat[j] - sum_dxhat - xhat[j] * sum_dxhat_xhat);
                    }
                    for (j, d) in dgain.row_mut(0).iter_mut().enumerate() {
                        *d += gr[j] * xhat[j];
                    }
                }
                vec![(*x, dx), (*gain, dgain), (*bias, g.col_sums())]
            }
            Op::Activate(a, act) => {
                let da = g.zip_map(val(*a), "activate", |x, y| x * activation_derivative(*act, y))?;
                vec![(*a, da)]
            }
            Op::Exp(a) => vec![(*a, g.zip_map(out, "exp", |x, y| x * y)?)],
            Op::NormalizeRows(a, norms) => {
                let av = val(*a);
                let mut da = g.clone();
                for (r, &n) in norms.iter().enumerate() {
                    let xg: f64 = av.row(r).iter().zip(g.row(r)).map(|(x, y)| x * y).sum();
                    for (d, x) in da.row_mut(r).iter_mut().zip(av.row(r)) {
                        *d = *d / n - x * xg / (n * n * n);
                    }
                }
                vec![(*a, da)]
            }
            Op::Dot(a, b) => {
                let k = g.item();
                vec![(*a, val(*b).map(|x| x * k)), (*b, val(*a).map(|x| x * k))]
            }
            Op::Sum(a) => {
                let av = val(*a);
                vec![(*a, Tensor::full(av.rows(), av.cols(), g.item()))]
            }
            Op::MeanRows(a) => {
                let av = val(*a);
                let inv = 1.0 / av.rows() as f64;
                let mut da = Tensor::zeros(av.rows(), av.cols());
                for r in 0..av.rows() {
                    for (d, x) in da.row_mut(r).iter_mut().zip(g.data()) {
                        *d = x * inv;
                    }
                }
                vec![(*a, da)]
            }
            Op::RowSums(a) => {
                let av = val(*a);
                let mut da = Tensor::zeros(av.rows(), av.cols());
                for r in 0..av.rows() {
                    da.row_mut(r).fill(g.get(r, 0));
                }
                vec![(*a, da)]
            }
        };
        Ok(grads)
    }
}

/// Numerically stable softmax over each row (max subtracted first).
pub fn softmax_rows(t: &Tensor) -> Result<Tensor> {
    let mut out = t.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    Ok(out)
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)

fn activation_value(act: Activation, x: f64) -> f64 {
    match act {
        Activation::Relu => x.max(0.0),
        Activation::Gelu => 0.5 * x * (1.0 + (GELU_C * (x + 0.044715 * x * x * x)).tanh()),
    }
}

fn activation_derivative(act: Activation, x: f64) -> f64 {
    match act {
        Activation::Relu => {
            if x > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        Activation::Gelu => {
            let inner = GELU_C * (x + 0.044715 * x * x * x);
            let t = inner.tanh();
            0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * 0.044715 * x * x)
        }
    }
}

/// Central finite differences, used as an independent oracle for `backward`.
pub mod gradcheck {
    use crate::tensor::Tensor;

    /// d f / d inputs[tensor][element] by central differences with step `h`.
    pub fn numeric_partial<F>(f: &F, inputs: &[Tensor], tensor: usize, element: usize, h: f64) -> f64
    where
        F: Fn(&[Tensor]) -> f64,
    {
        let mut plus = inputs.to_vec();
        plus[tensor].data_mut()[element] += h;
        let mut minus = inputs.to_vec();
        minus[tensor].data_mut()[element] -= h;
        (f(&plus) - f(&minus)) / (2.0 * h)
    }

    /// `|a - n| / max(|a|, |n|, floor)`; the floor keeps vanishing
    /// gradients from reporting spurious relative error.
    pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
        (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
    }
}
