//! Dense 2-D tensors of `f64` with define-by-run reverse-mode
//! differentiation.
//!
//! Every op's backward rule is itself written with tensor ops, so a gradient
//! computed with `create_graph = true` is an ordinary tracked tensor and can
//! be differentiated again.
//!
//! Broadcasting is limited to adding a `1×n` row to an `m×n` matrix
//! ([`Tensor::add_row`]); every other shape disagreement is an error.

mod autograd;
mod optim;
mod params;

pub use autograd::{grad, relu_pattern, Gradients};
pub use optim::{cosine_lr, Adam, Moments};
pub use params::{Lookup, Overlay, ParamSet, Role};

use alloc::rc::Rc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

static NEXT_ID: AtomicUsize = AtomicUsize::new(1);
static CHECKED: AtomicBool = AtomicBool::new(false);

/// In checked mode every op verifies its output is finite.
pub fn set_checked(on: bool) {
    CHECKED.store(on, Ordering::Relaxed);
}

pub fn is_checked() -> bool {
    CHECKED.load(Ordering::Relaxed)
}

#[derive(Clone)]
pub(crate) enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Scale(f64),
    AddScalar,
    AddRow,
    MatMul,
    Transpose,
    Relu,
    Tanh,
    Exp,
    Log,
    Sigmoid,
    Softplus,
    Softmax,
    LogSoftmax,
    Sum,
    Mean,
    RowSum,
    ColSum,
    BroadcastCols,
    BroadcastRows,
    Expand,
    ConcatCols(Vec<usize>),
    ConcatRows(Vec<usize>),
    SliceCols(usize, usize, usize),
    SliceRows(usize, usize, usize),
    GatherRows(Rc<[usize]>),
    ScatterAddRows(Rc<[usize]>),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Div => "div",
            Op::Neg => "neg",
            Op::Scale(_) => "scale",
            Op::AddScalar => "add_scalar",
            Op::AddRow => "add_row",
            Op::MatMul => "matmul",
            Op::Transpose => "transpose",
            Op::Relu => "relu",
            Op::Tanh => "tanh",
            Op::Exp => "exp",
            Op::Log => "log",
            Op::Sigmoid => "sigmoid",
            Op::Softplus => "softplus",
            Op::Softmax => "softmax",
            Op::LogSoftmax => "log_softmax",
            Op::Sum => "sum",
            Op::Mean => "mean",
            Op::RowSum => "row_sum",
            Op::ColSum => "col_sum",
            Op::BroadcastCols => "broadcast_cols",
            Op::BroadcastRows => "broadcast_rows",
            Op::Expand => "expand",
            Op::ConcatCols(_) => "concat_cols",
            Op::ConcatRows(_) => "concat_rows",
            Op::SliceCols(..) => "slice_cols",
            Op::SliceRows(..) => "slice_rows",
            Op::GatherRows(_) => "gather_rows",
            Op::ScatterAddRows(..) => "scatter_add_rows",
        }
    }
}

pub(crate) struct Node {
    pub(crate) op: Op,
    pub(crate) parents: Vec<Tensor>,
}

struct Inner {
    id: usize,
    rows: usize,
    cols: usize,
    data: Rc<[f64]>,
    requires_grad: bool,
    node: Option<Node>,
}

/// Reference-counted tensor handle; cloning is cheap and shares the node.
#[derive(Clone)]
pub struct Tensor(Rc<Inner>);

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.shape())
            .field("requires_grad", &self.0.requires_grad)
            .field("data", &&self.0.data[..])
            .finish()
    }
}

fn next_id() -> usize {
    NEXT_ID.fetch_add(1, Ordering::Relaxed)
}

impl Tensor {
    fn raw(
        rows: usize,
        cols: usize,
        data: Rc<[f64]>,
        requires_grad: bool,
        node: Option<Node>,
    ) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Tensor(Rc::new(Inner {
            id: next_id(),
            rows,
            cols,
            data,
            requires_grad,
            node,
        }))
    }

    /// Untracked constant.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                op: "new",
                left: (rows, cols),
                right: (data.len(), 1),
            });
        }
        Ok(Self::raw(rows, cols, data.into(), false, None))
    }

    pub fn from_matrix(m: &Matrix) -> Self {
        Self::raw(m.rows(), m.cols(), m.data().into(), false, None)
    }

    pub fn scalar(v: f64) -> Self {
        Self::raw(1, 1, Rc::from([v].as_slice()), false, None)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::full(rows, cols, 0.0)
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        Self::full(rows, cols, 1.0)
    }

    pub fn full(rows: usize, cols: usize, v: f64) -> Self {
        Self::raw(rows, cols, vec![v; rows * cols].into(), false, None)
    }

    /// Trainable leaf with the same values.
    pub fn param(&self) -> Self {
        Self::raw(self.0.rows, self.0.cols, self.0.data.clone(), true, None)
    }

    /// Untracked copy sharing the same values.
    pub fn detach(&self) -> Self {
        Self::raw(self.0.rows, self.0.cols, self.0.data.clone(), false, None)
    }

    pub fn id(&self) -> usize {
        self.0.id
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.0.rows, self.0.cols)
    }

    pub fn rows(&self) -> usize {
        self.0.rows
    }

    pub fn cols(&self) -> usize {
        self.0.cols
    }

    pub fn len(&self) -> usize {
        self.0.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.0.data
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_vec(self.0.rows, self.0.cols, self.0.data.to_vec())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.0.data[r * self.0.cols + c]
    }

    /// Value of a 1×1 tensor (first element otherwise).
    pub fn item(&self) -> f64 {
        self.0.data[0]
    }

    pub fn requires_grad(&self) -> bool {
        self.0.requires_grad
    }

    pub fn is_leaf(&self) -> bool {
        self.0.node.is_none()
    }

    pub(crate) fn node(&self) -> Option<&Node> {
        self.0.node.as_ref()
    }

    fn derive(
        op: Op,
        parents: &[&Tensor],
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    ) -> Result<Tensor> {
        if is_checked() && data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { op: op.name() });
        }
        let tracked = parents.iter().any(|p| p.requires_grad());
        let node = tracked.then(|| Node {
            op,
            parents: parents.iter().map(|&p| p.clone()).collect(),
        });
        Ok(Self::raw(rows, cols, data.into(), tracked, node))
    }

    fn same_shape(&self, o: &Tensor, op: &'static str) -> Result<()> {
        if self.shape() != o.shape() {
            return Err(Error::ShapeMismatch {
                op,
                left: self.shape(),
                right: o.shape(),
            });
        }
        Ok(())
    }

    fn zip(&self, o: &Tensor, op: Op, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        self.same_shape(o, op.name())?;
        let data = self
            .data()
            .iter()
            .zip(o.data())
            .map(|(&a, &b)| f(a, b))
            .collect();
        Tensor::derive(op, &[self, o], self.rows(), self.cols(), data)
    }

    fn map(&self, op: Op, f: impl Fn(f64) -> f64) -> Result<Tensor> {
        let data = self.data().iter().map(|&a| f(a)).collect();
        Tensor::derive(op, &[self], self.rows(), self.cols(), data)
    }

    pub fn add(&self, o: &Tensor) -> Result<Tensor> {
        self.zip(o, Op::Add, |a, b| a + b)
    }

    pub fn sub(&self, o: &Tensor) -> Result<Tensor> {
        self.zip(o, Op::Sub, |a, b| a - b)
    }

    /// Elementwise product.
    pub fn mul(&self, o: &Tensor) -> Result<Tensor> {
        self.zip(o, Op::Mul, |a, b| a * b)
    }

    pub fn div(&self, o: &Tensor) -> Result<Tensor> {
        self.zip(o, Op::Div, |a, b| a / b)
    }

    pub fn neg(&self) -> Result<Tensor> {
        self.map(Op::Neg, |a| -a)
    }

    pub fn scale(&self, c: f64) -> Result<Tensor> {
        self.map(Op::Scale(c), |a| a * c)
    }

    pub fn add_scalar(&self, c: f64) -> Result<Tensor> {
        self.map(Op::AddScalar, |a| a + c)
    }

    /// Adds a `1×n` row to every row of an `m×n` matrix.
    pub fn add_row(&self, row: &Tensor) -> Result<Tensor> {
        if row.rows() != 1 || row.cols() != self.cols() {
            return Err(Error::ShapeMismatch {
                op: "add_row",
                left: self.shape(),
                right: row.shape(),
            });
        }
        let n = self.cols();
        let data = self
            .data()
            .iter()
            .enumerate()
            .map(|(k, &a)| a + row.data()[k % n])
            .collect();
        Tensor::derive(Op::AddRow, &[self, row], self.rows(), n, data)
    }

    pub fn matmul(&self, o: &Tensor) -> Result<Tensor> {
        let (m, k) = self.shape();
        let (k2, n) = o.shape();
        if k != k2 {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                left: self.shape(),
                right: o.shape(),
            });
        }
        let a = self.data();
        let b = o.data();
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let row = &mut out[i * n..(i + 1) * n];
            for p in 0..k {
                let aip = a[i * k + p];
                if aip == 0.0 {
                    continue;
                }
                let brow = &b[p * n..(p + 1) * n];
                for (o, &bv) in row.iter_mut().zip(brow) {
                    *o += aip * bv;
                }
            }
        }
        Tensor::derive(Op::MatMul, &[self, o], m, n, out)
    }

    pub fn transpose(&self) -> Result<Tensor> {
        let (m, n) = self.shape();
        let a = self.data();
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                out[j * m + i] = a[i * n + j];
            }
        }
        Tensor::derive(Op::Transpose, &[self], n, m, out)
    }

    pub fn relu(&self) -> Result<Tensor> {
        self.map(Op::Relu, |a| if a > 0.0 { a } else { 0.0 })
    }

    pub fn tanh(&self) -> Result<Tensor> {
        self.map(Op::Tanh, libm::tanh)
    }

    pub fn exp(&self) -> Result<Tensor> {
        self.map(Op::Exp, libm::exp)
    }

    pub fn log(&self) -> Result<Tensor> {
        self.map(Op::Log, libm::log)
    }

    pub fn sigmoid(&self) -> Result<Tensor> {
        self.map(Op::Sigmoid, sigmoid)
    }

    /// `ln(1 + e^x)`, evaluated without overflow.
    pub fn softplus(&self) -> Result<Tensor> {
        self.map(Op::Softplus, softplus)
    }

    /// Row-wise softmax.
    pub fn softmax(&self) -> Result<Tensor> {
        let (m, n) = self.shape();
        let mut out = self.data().to_vec();
        for row in out.chunks_mut(n.max(1)).take(m) {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for v in row.iter_mut() {
                *v = libm::exp(*v - max);
                z += *v;
            }
            for v in row.iter_mut() {
                *v /= z;
            }
        }
        Tensor::derive(Op::Softmax, &[self], m, n, out)
    }

    /// Row-wise log-softmax.
    pub fn log_softmax(&self) -> Result<Tensor> {
        let (m, n) = self.shape();
        let mut out = self.data().to_vec();
        for row in out.chunks_mut(n.max(1)).take(m) {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = row.iter().map(|&v| libm::exp(v - max)).sum();
            let lse = max + libm::log(z);
            for v in row.iter_mut() {
                *v -= lse;
            }
        }
        Tensor::derive(Op::LogSoftmax, &[self], m, n, out)
    }

    /// Sum of all elements, as 1×1.
    pub fn sum(&self) -> Result<Tensor> {
        let s = self.data().iter().sum();
        Tensor::derive(Op::Sum, &[self], 1, 1, vec![s])
    }

    /// Mean of all elements, as 1×1.
    pub fn mean(&self) -> Result<Tensor> {
        let s: f64 = self.data().iter().sum();
        Tensor::derive(Op::Mean, &[self], 1, 1, vec![s / self.len() as f64])
    }

    /// Sum across columns: `m×n → m×1`.
    pub fn row_sum(&self) -> Result<Tensor> {
        let (m, n) = self.shape();
        let out = (0..m)
            .map(|i| self.data()[i * n..(i + 1) * n].iter().sum())
            .collect();
        Tensor::derive(Op::RowSum, &[self], m, 1, out)
    }

    /// Sum down rows: `m×n → 1×n`.
    pub fn col_sum(&self) -> Result<Tensor> {
        let (m, n) = self.shape();
        let mut out = vec![0.0; n];
        for i in 0..m {
            for (o, &v) in out.iter_mut().zip(&self.data()[i * n..(i + 1) * n]) {
                *o += v;
            }
        }
        Tensor::derive(Op::ColSum, &[self], 1, n, out)
    }

    /// Mean down rows: `m×n → 1×n`.
    pub fn col_mean(&self) -> Result<Tensor> {
        self.col_sum()?.scale(1.0 / self.rows() as f64)
    }

    /// Repeats an `m×1` column `n` times.
    pub fn broadcast_cols(&self, n: usize) -> Result<Tensor> {
        if self.cols() != 1 {
            return Err(Error::ShapeMismatch {
                op: "broadcast_cols",
                left: self.shape(),
                right: (self.rows(), 1),
            });
        }
        let out = self
            .data()
            .iter()
            .flat_map(|&v| core::iter::repeat_n(v, n))
            .collect();
        Tensor::derive(Op::BroadcastCols, &[self], self.rows(), n, out)
    }

    /// Repeats a `1×n` row `m` times.
    pub fn broadcast_rows(&self, m: usize) -> Result<Tensor> {
        if self.rows() != 1 {
            return Err(Error::ShapeMismatch {
                op: "broadcast_rows",
                left: self.shape(),
                right: (1, self.cols()),
            });
        }
        let mut out = Vec::with_capacity(m * self.cols());
        for _ in 0..m {
            out.extend_from_slice(self.data());
        }
        Tensor::derive(Op::BroadcastRows, &[self], m, self.cols(), out)
    }

    /// Fills an `m×n` tensor with the value of a 1×1 tensor.
    pub fn expand(&self, m: usize, n: usize) -> Result<Tensor> {
        if self.shape() != (1, 1) {
            return Err(Error::ShapeMismatch {
                op: "expand",
                left: self.shape(),
                right: (1, 1),
            });
        }
        Tensor::derive(Op::Expand, &[self], m, n, vec![self.item(); m * n])
    }

    /// Side-by-side concatenation; all parts share the row count.
    pub fn concat_cols(parts: &[&Tensor]) -> Result<Tensor> {
        let m = parts.first().map_or(0, |p| p.rows());
        if let Some(bad) = parts.iter().find(|p| p.rows() != m) {
            return Err(Error::ShapeMismatch {
                op: "concat_cols",
                left: (m, 0),
                right: bad.shape(),
            });
        }
        let widths: Vec<usize> = parts.iter().map(|p| p.cols()).collect();
        let n: usize = widths.iter().sum();
        let mut out = Vec::with_capacity(m * n);
        for i in 0..m {
            for p in parts {
                out.extend_from_slice(&p.data()[i * p.cols()..(i + 1) * p.cols()]);
            }
        }
        Tensor::derive(Op::ConcatCols(widths), parts, m, n, out)
    }

    /// Stacks parts vertically; all parts share the column count.
    pub fn concat_rows(parts: &[&Tensor]) -> Result<Tensor> {
        let n = parts.first().map_or(0, |p| p.cols());
        if let Some(bad) = parts.iter().find(|p| p.cols() != n) {
            return Err(Error::ShapeMismatch {
                op: "concat_rows",
                left: (0, n),
                right: bad.shape(),
            });
        }
        let heights: Vec<usize> = parts.iter().map(|p| p.rows()).collect();
        let m: usize = heights.iter().sum();
        let mut out = Vec::with_capacity(m * n);
        for p in parts {
            out.extend_from_slice(p.data());
        }
        Tensor::derive(Op::ConcatRows(heights), parts, m, n, out)
    }

    /// Columns `start..end`.
    pub fn slice_cols(&self, start: usize, end: usize) -> Result<Tensor> {
        let (m, n) = self.shape();
        if start > end || end > n {
            return Err(Error::ShapeMismatch {
                op: "slice_cols",
                left: self.shape(),
                right: (start, end),
            });
        }
        let mut out = Vec::with_capacity(m * (end - start));
        for i in 0..m {
            out.extend_from_slice(&self.data()[i * n + start..i * n + end]);
        }
        Tensor::derive(Op::SliceCols(start, end, n), &[self], m, end - start, out)
    }

    /// Rows `start..end`.
    pub fn slice_rows(&self, start: usize, end: usize) -> Result<Tensor> {
        let (m, n) = self.shape();
        if start > end || end > m {
            return Err(Error::ShapeMismatch {
                op: "slice_rows",
                left: self.shape(),
                right: (start, end),
            });
        }
        let out = self.data()[start * n..end * n].to_vec();
        Tensor::derive(Op::SliceRows(start, end, m), &[self], end - start, n, out)
    }

    /// Row `k` of the output is row `indices[k]` of `self`.
    pub fn gather_rows(&self, indices: &[usize]) -> Result<Tensor> {
        let (m, n) = self.shape();
        if let Some(&bad) = indices.iter().find(|&&i| i >= m) {
            return Err(Error::ShapeMismatch {
                op: "gather_rows",
                left: self.shape(),
                right: (bad, n),
            });
        }
        let mut out = Vec::with_capacity(indices.len() * n);
        for &i in indices {
            out.extend_from_slice(&self.data()[i * n..(i + 1) * n]);
        }
        Tensor::derive(
            Op::GatherRows(indices.into()),
            &[self],
            indices.len(),
            n,
            out,
        )
    }

    /// Adjoint of [`Tensor::gather_rows`]: row `k` of `self` is added into row
    /// `indices[k]` of an `out_rows×n` zero matrix.
    pub fn scatter_add_rows(&self, indices: &[usize], out_rows: usize) -> Result<Tensor> {
        let (m, n) = self.shape();
        if indices.len() != m || indices.iter().any(|&i| i >= out_rows) {
            return Err(Error::ShapeMismatch {
                op: "scatter_add_rows",
                left: self.shape(),
                right: (out_rows, indices.len()),
            });
        }
        let mut out = vec![0.0; out_rows * n];
        for (k, &i) in indices.iter().enumerate() {
            for (o, &v) in out[i * n..(i + 1) * n]
                .iter_mut()
                .zip(&self.data()[k * n..(k + 1) * n])
            {
                *o += v;
            }
        }
        Tensor::derive(
            Op::ScatterAddRows(indices.into()),
            &[self],
            out_rows,
            n,
            out,
        )
    }

    /// `Σ self ⊙ o` as 1×1.
    pub fn dot(&self, o: &Tensor) -> Result<Tensor> {
        self.mul(o)?.sum()
    }

    /// `x W + b` with `W: in×out`, `b: 1×out`.
    pub fn linear(&self, w: &Tensor, b: Option<&Tensor>) -> Result<Tensor> {
        let y = self.matmul(w)?;
        match b {
            Some(b) => y.add_row(b),
            None => Ok(y),
        }
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + libm::log1p(libm::exp(-libm::fabs(x)))
}
