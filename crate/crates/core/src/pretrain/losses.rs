//! Distance classification, distance regression and masked-angle losses
//! for one protein.

use alloc::vec;
use alloc::vec::Vec;

use super::BinSpec;
use crate::error::{Error, Result};
use crate::geometry::normalize_angle;
use crate::graph::{MaskedGraph, ProteinGraph};
use crate::matrix::Matrix;
use crate::models::{ordered_pairs, Model};
use crate::tensor::{Lookup, Tensor};

/// Per-protein pretext terms; `None` when the term is switched off.
#[derive(Debug, Clone)]
pub struct ProteinLosses {
    pub distance: Option<Tensor>,
    pub angle: Option<Tensor>,
}

fn pair_differences(fused: &Tensor) -> Result<Tensor> {
    let (left, right) = ordered_pairs(fused.rows());
    fused.gather_rows(&left)?.sub(&fused.gather_rows(&right)?)
}

fn check_rows(g: &ProteinGraph, fused: &Tensor) -> Result<()> {
    if fused.rows() != g.len() {
        return Err(Error::DimensionMismatch {
            what: alloc::format!("representation rows for {}", g.id),
            expected: g.len(),
            found: fused.rows(),
        });
    }
    Ok(())
}

/// Cross-entropy of the distance head over all L² ordered pairs, diagonal
/// included, divided by L².
pub fn distance_loss(
    model: &Model,
    p: &impl Lookup,
    g: &ProteinGraph,
    fused: &Tensor,
    bins: &BinSpec,
) -> Result<Tensor> {
    check_rows(g, fused)?;
    let n = g.len();
    let logp = model
        .distance_logits(p, &pair_differences(fused)?)?
        .log_softmax()?;
    if logp.cols() != bins.classes {
        return Err(Error::DimensionMismatch {
            what: "distance classes".into(),
            expected: bins.classes,
            found: logp.cols(),
        });
    }
    let mut onehot = vec![0.0; n * n * bins.classes];
    for i in 0..n {
        for j in 0..n {
            onehot[(i * n + j) * bins.classes + bins.label(g.distances.get(i, j))] = 1.0;
        }
    }
    let onehot = Tensor::new(n * n, bins.classes, onehot)?;
    onehot.mul(&logp)?.sum()?.scale(-1.0 / (n * n) as f64)
}

/// Mean squared error of the scalar distance head against `d_ij / threshold`.
pub fn distance_loss_regression(
    model: &Model,
    p: &impl Lookup,
    g: &ProteinGraph,
    fused: &Tensor,
    threshold: f64,
) -> Result<Tensor> {
    check_rows(g, fused)?;
    let n = g.len();
    let pred = model.distance_regression_head(p, &pair_differences(fused)?)?;
    let targets: Vec<f64> = (0..n * n)
        .map(|k| g.distances.get(k / n, k % n) / threshold)
        .collect();
    let diff = pred.sub(&Tensor::new(n * n, 1, targets)?)?;
    diff.mul(&diff)?.mean()
}

/// Normalized angle targets for the masked rows, and 0/1 weights that drop
/// undefined chain-end angles.
pub fn angle_targets(mg: &MaskedGraph<'_>) -> (Matrix, Matrix) {
    let m = mg.masked.len();
    let mut targets = Matrix::zeros(m, 2);
    let mut weights = Matrix::zeros(m, 2);
    for (r, &i) in mg.masked.iter().enumerate() {
        let d = mg.base.dihedrals[i];
        targets
            .row_mut(r)
            .copy_from_slice(&[normalize_angle(d.phi), normalize_angle(d.psi)]);
        weights
            .row_mut(r)
            .copy_from_slice(&[d.phi.map_or(0.0, |_| 1.0), d.psi.map_or(0.0, |_| 1.0)]);
    }
    (targets, weights)
}

/// `Σ_{i∈M} (φ_i − φ̄_i)² + (ψ_i − ψ̄_i)²` over defined angles.
pub fn angle_loss(
    model: &Model,
    p: &impl Lookup,
    mg: &MaskedGraph<'_>,
    fused_masked: &Tensor,
) -> Result<Tensor> {
    check_rows(mg.base, fused_masked)?;
    if mg.masked.is_empty() {
        return Err(Error::NoMaskable);
    }
    let pred = model.angle_head(p, &fused_masked.gather_rows(&mg.masked)?)?;
    let (targets, weights) = angle_targets(mg);
    let diff = pred.sub(&Tensor::from_matrix(&targets))?;
    diff.mul(&diff)?.mul(&Tensor::from_matrix(&weights))?.sum()
}
