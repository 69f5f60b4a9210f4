//! Sequence encoders: a small trainable self-attention encoder, and a
//! lookup table of per-residue embeddings computed by an external model.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::Model;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::tensor::{Lookup, Tensor};

/// Sinusoidal position encoding, L×E.
pub fn positional_encoding(len: usize, dim: usize) -> Matrix {
    let mut m = Matrix::zeros(len, dim);
    for pos in 0..len {
        for k in 0..dim {
            let rate = libm::pow(10_000.0, (2 * (k / 2)) as f64 / dim as f64);
            let angle = pos as f64 / rate;
            m.set(
                pos,
                k,
                if k % 2 == 0 {
                    libm::sin(angle)
                } else {
                    libm::cos(angle)
                },
            );
        }
    }
    m
}

impl Model {
    /// `Z + softmax(Q Kᵀ / √E) V W_o` with `Z = embed[tokens] + PE`.
    pub fn toy_seq_forward(&self, p: &impl Lookup, tokens: &[usize]) -> Result<Tensor> {
        let e = self.cfg.seq_dim;
        let z = p
            .param("seq.embed")?
            .gather_rows(tokens)?
            .add(&Tensor::from_matrix(&positional_encoding(tokens.len(), e)))?;
        let q = z.matmul(p.param("seq.wq")?)?;
        let k = z.matmul(p.param("seq.wk")?)?;
        let v = z.matmul(p.param("seq.wv")?)?;
        let attn = q
            .matmul(&k.transpose()?)?
            .scale(1.0 / libm::sqrt(e as f64))?
            .softmax()?;
        z.add(&attn.matmul(&v)?.matmul(p.param("seq.wo")?)?)
    }
}

/// Per-protein embedding matrices produced outside this crate.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingTable {
    entries: BTreeMap<String, Matrix>,
}

impl EmbeddingTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: impl Into<String>, m: Matrix) {
        self.entries.insert(id.into(), m);
    }

    pub fn lookup(&self, id: &str) -> Result<&Matrix> {
        self.entries
            .get(id)
            .ok_or_else(|| Error::MissingEmbedding(id.into()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Matrix)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn ids(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }
}
