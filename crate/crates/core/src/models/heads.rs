//! Two-layer pretext heads: distance classes, distance regression, angles.

use super::{apply_linear, Model};
use crate::error::Result;
use crate::tensor::{Lookup, Tensor};

fn two_layer(p: &impl Lookup, prefix: &str, x: &Tensor) -> Result<Tensor> {
    let hidden = apply_linear(p, &alloc::format!("{prefix}.fc1"), x)?.relu()?;
    apply_linear(p, &alloc::format!("{prefix}.fc2"), &hidden)
}

impl Model {
    /// Distance-class logits for each row of `h_i − h_j`.
    pub fn distance_logits(&self, p: &impl Lookup, diffs: &Tensor) -> Result<Tensor> {
        two_layer(p, "dist", diffs)
    }

    /// Class probabilities over T distance bins for each row pair `(h_i, h_j)`.
    pub fn distance_head(&self, p: &impl Lookup, hi: &Tensor, hj: &Tensor) -> Result<Tensor> {
        self.distance_logits(p, &hi.sub(hj)?)?.softmax()
    }

    /// Scalar distance estimate (in units of the edge threshold) per row of `h_i − h_j`.
    pub fn distance_regression_head(&self, p: &impl Lookup, diffs: &Tensor) -> Result<Tensor> {
        two_layer(p, "distreg", diffs)
    }

    /// Normalized `(φ̂, ψ̂)` per row, squashed to [−1, 1].
    pub fn angle_head(&self, p: &impl Lookup, h: &Tensor) -> Result<Tensor> {
        two_layer(p, "angle", h)?.tanh()
    }
}
