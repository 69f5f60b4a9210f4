//! Reverse-mode sweep over the recorded graph.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use super::{Op, Tensor};
use crate::error::{Error, Result};

/// Gradients in the order of the `wrt` slice passed to [`grad`].
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Tensor>,
    unreachable: usize,
}

impl Gradients {
    pub fn get(&self, i: usize) -> &Tensor {
        &self.grads[i]
    }

    pub fn as_slice(&self) -> &[Tensor] {
        &self.grads
    }

    pub fn into_vec(self) -> Vec<Tensor> {
        self.grads
    }

    /// How many requested tensors the output does not depend on. Their
    /// gradient is reported as zeros.
    pub fn unreachable(&self) -> usize {
        self.unreachable
    }
}

/// Gradients of the scalar `output` with respect to each tensor in `wrt`.
///
/// With `create_graph` the returned gradients are themselves tracked and can
/// be differentiated again; otherwise they are constants.
pub fn grad(output: &Tensor, wrt: &[Tensor], create_graph: bool) -> Result<Gradients> {
    if output.shape() != (1, 1) {
        return Err(Error::ShapeMismatch {
            op: "grad",
            left: output.shape(),
            right: (1, 1),
        });
    }
    let keep: BTreeSet<usize> = wrt.iter().map(Tensor::id).collect();
    let mut acc: BTreeMap<usize, Tensor> = BTreeMap::new();
    let mut results: BTreeMap<usize, Tensor> = BTreeMap::new();

    if output.requires_grad() {
        acc.insert(output.id(), Tensor::ones(1, 1));
        for t in topo_order(output).iter().rev() {
            let Some(g) = acc.remove(&t.id()) else {
                continue;
            };
            if keep.contains(&t.id()) {
                results.insert(t.id(), g.clone());
            }
            let Some(node) = t.node() else {
                continue;
            };
            let g = if create_graph { g } else { g.detach() };
            let parent_grads = backward(&node.op, &node.parents, t, &g, create_graph)?;
            for (p, pg) in node.parents.iter().zip(parent_grads) {
                if !p.requires_grad() {
                    continue;
                }
                match acc.remove(&p.id()) {
                    Some(prev) => {
                        acc.insert(p.id(), prev.add(&pg)?);
                    }
                    None => {
                        acc.insert(p.id(), pg);
                    }
                }
            }
        }
    }

    let mut unreachable = 0;
    let grads = wrt
        .iter()
        .map(|w| match results.get(&w.id()) {
            Some(g) => g.clone(),
            None => {
                unreachable += 1;
                Tensor::zeros(w.rows(), w.cols())
            }
        })
        .collect();
    Ok(Gradients { grads, unreachable })
}

/// Sign pattern (`> 0`) of every tracked ReLU input reachable from `output`,
/// in a fixed traversal order.
pub fn relu_pattern(output: &Tensor) -> Vec<bool> {
    let mut out = Vec::new();
    for t in topo_order(output) {
        if let Some(node) = t.node() {
            if matches!(node.op, Op::Relu) {
                out.extend(node.parents[0].data().iter().map(|&v| v > 0.0));
            }
        }
    }
    out
}

/// Tracked nodes reachable from `root`, parents before children.
fn topo_order(root: &Tensor) -> Vec<Tensor> {
    let mut order = Vec::new();
    let mut visited = BTreeSet::new();
    let mut stack = vec![(root.clone(), false)];
    while let Some((t, expanded)) = stack.pop() {
        if expanded {
            order.push(t);
            continue;
        }
        if !visited.insert(t.id()) {
            continue;
        }
        stack.push((t.clone(), true));
        if let Some(node) = t.node() {
            for p in node.parents.iter().rev() {
                if p.requires_grad() && !visited.contains(&p.id()) {
                    stack.push((p.clone(), false));
                }
            }
        }
    }
    order
}

fn backward(
    op: &Op,
    parents: &[Tensor],
    out: &Tensor,
    g: &Tensor,
    create_graph: bool,
) -> Result<Vec<Tensor>> {
    let p = |i: usize| {
        if create_graph {
            parents[i].clone()
        } else {
            parents[i].detach()
        }
    };
    let y = || {
        if create_graph {
            out.clone()
        } else {
            out.detach()
        }
    };

    let grads = match op {
        Op::Add => vec![g.clone(), g.clone()],
        Op::Sub => vec![g.clone(), g.neg()?],
        Op::Mul => vec![g.mul(&p(1))?, g.mul(&p(0))?],
        Op::Div => {
            let (a, b) = (p(0), p(1));
            vec![g.div(&b)?, g.mul(&a)?.div(&b.mul(&b)?)?.neg()?]
        }
        Op::Neg => vec![g.neg()?],
        Op::Scale(c) => vec![g.scale(*c)?],
        Op::AddScalar => vec![g.clone()],
        Op::AddRow => vec![g.clone(), g.col_sum()?],
        Op::MatMul => {
            let (a, b) = (p(0), p(1));
            vec![g.matmul(&b.transpose()?)?, a.transpose()?.matmul(g)?]
        }
        Op::Transpose => vec![g.transpose()?],
        Op::Relu => {
            let a = &parents[0];
            let mask = a
                .data()
                .iter()
                .map(|&v| if v > 0.0 { 1.0 } else { 0.0 })
                .collect();
            vec![g.mul(&Tensor::new(a.rows(), a.cols(), mask)?)?]
        }
        Op::Tanh => {
            let y = y();
            vec![g.mul(&y.mul(&y)?.neg()?.add_scalar(1.0)?)?]
        }
        Op::Exp => vec![g.mul(&y())?],
        Op::Log => vec![g.div(&p(0))?],
        Op::Sigmoid => {
            let y = y();
            vec![g.mul(&y)?.mul(&y.neg()?.add_scalar(1.0)?)?]
        }
        Op::Softplus => vec![g.mul(&p(0).sigmoid()?)?],
        Op::Softmax => {
            let y = y();
            let inner = g.mul(&y)?.row_sum()?.broadcast_cols(y.cols())?;
            vec![y.mul(&g.sub(&inner)?)?]
        }
        Op::LogSoftmax => {
            let soft = y().exp()?;
            let total = g.row_sum()?.broadcast_cols(g.cols())?;
            vec![g.sub(&soft.mul(&total)?)?]
        }
        Op::Sum => {
            let (m, n) = parents[0].shape();
            vec![g.expand(m, n)?]
        }
        Op::Mean => {
            let (m, n) = parents[0].shape();
            vec![g.expand(m, n)?.scale(1.0 / (m * n) as f64)?]
        }
        Op::RowSum => vec![g.broadcast_cols(parents[0].cols())?],
        Op::ColSum => vec![g.broadcast_rows(parents[0].rows())?],
        Op::BroadcastCols => vec![g.row_sum()?],
        Op::BroadcastRows => vec![g.col_sum()?],
        Op::Expand => vec![g.sum()?],
        Op::ConcatCols(widths) => {
            let mut start = 0;
            let mut out = Vec::with_capacity(widths.len());
            for &w in widths {
                out.push(g.slice_cols(start, start + w)?);
                start += w;
            }
            out
        }
        Op::ConcatRows(heights) => {
            let mut start = 0;
            let mut out = Vec::with_capacity(heights.len());
            for &h in heights {
                out.push(g.slice_rows(start, start + h)?);
                start += h;
            }
            out
        }
        Op::SliceCols(start, end, total) => {
            let m = g.rows();
            let left = Tensor::zeros(m, *start);
            let right = Tensor::zeros(m, total - end);
            let mut parts = Vec::with_capacity(3);
            if *start > 0 {
                parts.push(&left);
            }
            parts.push(g);
            if total > end {
                parts.push(&right);
            }
            vec![Tensor::concat_cols(&parts)?]
        }
        Op::SliceRows(start, end, total) => {
            let n = g.cols();
            let top = Tensor::zeros(*start, n);
            let bottom = Tensor::zeros(total - end, n);
            let mut parts = Vec::with_capacity(3);
            if *start > 0 {
                parts.push(&top);
            }
            parts.push(g);
            if total > end {
                parts.push(&bottom);
            }
            vec![Tensor::concat_rows(&parts)?]
        }
        Op::GatherRows(idx) => vec![g.scatter_add_rows(idx, parents[0].rows())?],
        Op::ScatterAddRows(idx) => vec![g.gather_rows(idx)?],
    };
    Ok(grads)
}
