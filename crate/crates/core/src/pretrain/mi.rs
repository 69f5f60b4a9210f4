//! Jensen-Shannon mutual-information estimate between pooled sequence and
//! structure representations.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::models::Model;
use crate::tensor::{Lookup, Tensor};

/// Index of the structure representation paired with protein `i` as a
/// negative: the next protein in the batch, cyclically.
pub fn negative_partner(i: usize, batch: usize) -> usize {
    (i + 1) % batch
}

/// `mean_i[−sp(−T(s_i, g_i))] − mean_i[sp(T(s_i, g_{i+1}))]`.
///
/// `seq_reprs` rows are mean-pooled sequence representations, `graph_reprs`
/// rows the matching graph readouts.
pub fn mi_objective(
    model: &Model,
    p: &impl Lookup,
    seq_reprs: &Tensor,
    graph_reprs: &Tensor,
) -> Result<Tensor> {
    let b = seq_reprs.rows();
    if b < 2 {
        return Err(Error::BatchTooSmall { size: b });
    }
    if graph_reprs.rows() != b {
        return Err(Error::DimensionMismatch {
            what: "graph representations in batch".into(),
            expected: b,
            found: graph_reprs.rows(),
        });
    }
    let towers = model.disc_towers(p, seq_reprs, graph_reprs)?;
    let positive = towers.seq.mul(&towers.graph)?.row_sum()?;
    let shift: Vec<usize> = (0..b).map(|i| negative_partner(i, b)).collect();
    let negative = towers
        .seq
        .mul(&towers.graph.gather_rows(&shift)?)?
        .row_sum()?;
    let pos_term = positive.neg()?.softplus()?.neg()?.mean()?;
    let neg_term = negative.softplus()?.mean()?;
    pos_term.sub(&neg_term)
}
