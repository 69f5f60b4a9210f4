//! Mutual-information critic: one three-layer tower per view, each layer
//! `relu(x W + b) + x S`, scored by the dot product of the tower outputs.

use alloc::format;

use super::Model;
use crate::error::{Error, Result};
use crate::tensor::{Lookup, Tensor};

#[derive(Debug, Clone)]
pub struct TowerOutputs {
    /// B×D, from pooled sequence representations.
    pub seq: Tensor,
    /// B×D, from graph representations.
    pub graph: Tensor,
}

fn tower(p: &impl Lookup, name: &str, x: &Tensor) -> Result<Tensor> {
    let mut h = x.clone();
    for l in 1..=3 {
        let prefix = format!("disc.{name}.l{l}");
        let w = p.param(&format!("{prefix}.w"))?;
        if h.cols() != w.rows() {
            return Err(Error::DimensionMismatch {
                what: format!("input width of {prefix}"),
                expected: w.rows(),
                found: h.cols(),
            });
        }
        let main = h
            .linear(w, Some(p.param(&format!("{prefix}.b"))?))?
            .relu()?;
        let skip = h.matmul(p.param(&format!("{prefix}.skip"))?)?;
        h = main.add(&skip)?;
    }
    Ok(h)
}

impl Model {
    pub fn disc_towers(
        &self,
        p: &impl Lookup,
        seq_reprs: &Tensor,
        graph_reprs: &Tensor,
    ) -> Result<TowerOutputs> {
        Ok(TowerOutputs {
            seq: tower(p, "seq", seq_reprs)?,
            graph: tower(p, "graph", graph_reprs)?,
        })
    }

    /// Critic score per row: `⟨tower_s(h^s_b), tower_g(h^G_b)⟩`, B×1.
    pub fn discriminator(
        &self,
        p: &impl Lookup,
        seq_reprs: &Tensor,
        graph_reprs: &Tensor,
    ) -> Result<Tensor> {
        let t = self.disc_towers(p, seq_reprs, graph_reprs)?;
        t.seq.mul(&t.graph)?.row_sum()
    }
}
