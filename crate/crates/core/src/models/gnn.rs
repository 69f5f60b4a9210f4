//! Edge-weighted sum aggregation with a linear combine step.

use alloc::format;
use alloc::vec::Vec;

use super::{apply_linear, Model};
use crate::error::{Error, Result};
use crate::tensor::{Lookup, Tensor};

/// `h^(0)` (projected input) through `h^(K)`, each L×H.
#[derive(Debug, Clone)]
pub struct NodeStates {
    pub layers: Vec<Tensor>,
}

impl NodeStates {
    pub fn last(&self) -> &Tensor {
        self.layers.last().expect("at least the input projection")
    }

    /// Mean readout over residues, 1×H.
    pub fn graph_repr(&self) -> Result<Tensor> {
        self.last().col_mean()
    }
}

impl Model {
    /// `a^(k) = A h^(k−1)` with `A_iv = e_iv`; `h^(k) = Linear_k(h^(k−1) + a^(k))`,
    /// ReLU between layers and none after layer K.
    pub fn gnn_forward(
        &self,
        p: &impl Lookup,
        x: &Tensor,
        adjacency: &Tensor,
    ) -> Result<NodeStates> {
        let n = x.rows();
        if adjacency.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                what: "adjacency size".into(),
                expected: n,
                found: adjacency.rows(),
            });
        }
        let mut h = apply_linear(p, "gnn.in", x)?;
        let mut layers = Vec::with_capacity(self.cfg.layers + 1);
        layers.push(h.clone());
        for k in 1..=self.cfg.layers {
            let agg = adjacency.matmul(&h)?;
            let mut next = apply_linear(p, &format!("gnn.layer{k}"), &h.add(&agg)?)?;
            if k < self.cfg.layers {
                next = next.relu()?;
            }
            layers.push(next.clone());
            h = next;
        }
        Ok(NodeStates { layers })
    }

    /// `h = Proj(h^s) + h^(K)`; `Proj` is the identity when E = H.
    pub fn fuse(&self, p: &impl Lookup, seq: &Tensor, structure: &Tensor) -> Result<Tensor> {
        if self.cfg.seq_dim == self.cfg.hidden {
            seq.add(structure)
        } else {
            seq.matmul(p.param("fuse.w")?)?.add(structure)
        }
    }
}
