//! Encoders and heads, written functionally over a [`Lookup`] of parameters
//! so the same forward code runs on persisted parameters or on a virtual
//! inner-step overlay.

mod discriminator;
mod gnn;
mod heads;
mod seq;

pub use discriminator::TowerOutputs;
pub use gnn::NodeStates;
pub use seq::{positional_encoding, EmbeddingTable};

use alloc::format;
use alloc::vec::Vec;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::config::{SeqMode, TrainConfig};
use crate::error::{Error, Result};
use crate::graph::{angle_dim, NodeInput, ProteinGraph};
use crate::seed;
use crate::structure::ALPHABET;
use crate::tensor::{Lookup, ParamSet, Role, Tensor};

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Sequence embedding width E.
    pub seq_dim: usize,
    /// GNN hidden width H.
    pub hidden: usize,
    /// Message-passing layers K.
    pub layers: usize,
    pub rbf_count: usize,
    /// Distance classes T.
    pub bins: usize,
    /// Discriminator tower width.
    pub disc_dim: usize,
    pub seq_mode: SeqMode,
    pub distance_regression: bool,
}

impl ModelConfig {
    pub fn from_train(cfg: &TrainConfig) -> Self {
        Self {
            seq_dim: cfg.seq_dim,
            hidden: cfg.hidden,
            layers: cfg.layers,
            rbf_count: cfg.rbf_count,
            bins: cfg.bins,
            disc_dim: cfg.disc_dim,
            seq_mode: cfg.seq_mode,
            distance_regression: cfg.distance_regression,
        }
    }

    /// GNN input width: sequence block, angle block and the mask indicator.
    pub fn input_dim(&self) -> usize {
        self.seq_dim + angle_dim(self.rbf_count) + 1
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("seq_dim", self.seq_dim),
            ("hidden", self.hidden),
            ("layers", self.layers),
            ("disc_dim", self.disc_dim),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidConfig(format!("{name} must be at least 1")));
        }
        if self.bins < 2 {
            return Err(Error::InvalidConfig(
                "at least two distance bins are needed".into(),
            ));
        }
        if self.rbf_count < 2 {
            return Err(Error::InvalidConfig("rbf_count must be at least 2".into()));
        }
        Ok(())
    }
}

/// Fused per-residue and pooled representations of one protein.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub seq: Tensor,
    pub states: NodeStates,
    /// `Proj(h^s) + h^(K)`, L×H.
    pub fused: Tensor,
}

#[derive(Debug, Clone)]
pub struct Model {
    cfg: ModelConfig,
}

fn xavier(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    let bound = libm::sqrt(6.0 / (rows + cols) as f64);
    let data = (0..rows * cols)
        .map(|_| rng.gen_range(-bound..bound))
        .collect();
    Tensor::new(rows, cols, data).expect("shape")
}

fn linear_params(
    ps: &mut ParamSet,
    rng: &mut ChaCha8Rng,
    prefix: &str,
    role: Role,
    fan_in: usize,
    fan_out: usize,
) {
    ps.insert(format!("{prefix}.w"), role, &xavier(rng, fan_in, fan_out));
    ps.insert(format!("{prefix}.b"), role, &Tensor::zeros(1, fan_out));
}

pub(crate) fn apply_linear(p: &impl Lookup, prefix: &str, x: &Tensor) -> Result<Tensor> {
    let w = p.param(&format!("{prefix}.w"))?;
    let b = p.param(&format!("{prefix}.b"))?;
    if x.cols() != w.rows() {
        return Err(Error::DimensionMismatch {
            what: format!("input width of {prefix}"),
            expected: w.rows(),
            found: x.cols(),
        });
    }
    x.linear(w, Some(b))
}

impl Model {
    pub fn new(cfg: ModelConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    /// Fresh parameters for the sequence encoder (toy mode only), GNN,
    /// fusion projection, pretext heads and discriminator.
    pub fn init_params(&self, seed_value: u64) -> ParamSet {
        let c = &self.cfg;
        let mut rng = seed::rng(seed::stream_seed(seed_value, "init", 0));
        let mut ps = ParamSet::new();
        let (e, h) = (c.seq_dim, c.hidden);

        if c.seq_mode == SeqMode::Toy {
            ps.insert(
                "seq.embed",
                Role::Sequence,
                &xavier(&mut rng, ALPHABET.len(), e),
            );
            for name in ["seq.wq", "seq.wk", "seq.wv", "seq.wo"] {
                ps.insert(name, Role::Sequence, &xavier(&mut rng, e, e));
            }
        }

        linear_params(&mut ps, &mut rng, "gnn.in", Role::Gnn, c.input_dim(), h);
        for k in 1..=c.layers {
            linear_params(&mut ps, &mut rng, &format!("gnn.layer{k}"), Role::Gnn, h, h);
        }

        if e != h {
            ps.insert("fuse.w", Role::Heads, &xavier(&mut rng, e, h));
        }
        if c.distance_regression {
            linear_params(&mut ps, &mut rng, "distreg.fc1", Role::Heads, h, h);
            linear_params(&mut ps, &mut rng, "distreg.fc2", Role::Heads, h, 1);
        } else {
            linear_params(&mut ps, &mut rng, "dist.fc1", Role::Heads, h, h);
            linear_params(&mut ps, &mut rng, "dist.fc2", Role::Heads, h, c.bins);
        }
        linear_params(&mut ps, &mut rng, "angle.fc1", Role::Heads, h, h);
        linear_params(&mut ps, &mut rng, "angle.fc2", Role::Heads, h, 2);

        for (tower, width) in [("disc.seq", e), ("disc.graph", h)] {
            let mut fan_in = width;
            for l in 1..=3 {
                let prefix = format!("{tower}.l{l}");
                linear_params(
                    &mut ps,
                    &mut rng,
                    &prefix,
                    Role::Discriminator,
                    fan_in,
                    c.disc_dim,
                );
                ps.insert(
                    format!("{prefix}.skip"),
                    Role::Discriminator,
                    &xavier(&mut rng, fan_in, c.disc_dim),
                );
                fan_in = c.disc_dim;
            }
        }
        ps
    }

    /// Checks loaded parameters against this architecture. Encoder
    /// parameters must be present; any parameter this model would create
    /// must have the shape it would create.
    pub fn check_params(&self, p: &ParamSet) -> Result<()> {
        for (name, role, expected) in self.init_params(0).iter() {
            let Some(found) = p.get(name) else {
                if matches!(role, Role::Sequence | Role::Gnn) || name == "fuse.w" {
                    return Err(Error::MissingParam(name.into()));
                }
                continue;
            };
            for (axis, e, f) in [
                ("rows", expected.rows(), found.rows()),
                ("cols", expected.cols(), found.cols()),
            ] {
                if e != f {
                    return Err(Error::DimensionMismatch {
                        what: format!("{name} {axis}"),
                        expected: e,
                        found: f,
                    });
                }
            }
        }
        Ok(())
    }

    /// Per-residue sequence representation `h^s` (L×E).
    pub fn seq_forward(&self, p: &impl Lookup, g: &ProteinGraph) -> Result<Tensor> {
        match self.cfg.seq_mode {
            SeqMode::Toy => self.toy_seq_forward(p, &g.sequence.tokens()),
            SeqMode::Frozen => {
                if g.seq_dim != self.cfg.seq_dim {
                    return Err(Error::DimensionMismatch {
                        what: format!("frozen embedding width of {}", g.id),
                        expected: self.cfg.seq_dim,
                        found: g.seq_dim,
                    });
                }
                Ok(Tensor::from_matrix(&g.seq_block()))
            }
        }
    }

    /// GNN input `[h^s | angle block | mask indicator]`.
    pub fn node_input(&self, seq_emb: &Tensor, input: NodeInput<'_>) -> Result<Tensor> {
        let g = input.graph;
        let expected = angle_dim(self.cfg.rbf_count);
        let found = input.features.cols() - g.seq_dim;
        if found != expected {
            return Err(Error::DimensionMismatch {
                what: format!("angle feature width of {}", g.id),
                expected,
                found,
            });
        }
        let angles = Tensor::from_matrix(&input.features.columns(g.seq_dim, input.features.cols()));
        let flags = Tensor::new(g.len(), 1, input.mask_indicator())?;
        Tensor::concat_cols(&[seq_emb, &angles, &flags])
    }

    /// Sequence embedding, GNN and fusion for one (possibly masked) graph.
    pub fn encode(
        &self,
        p: &impl Lookup,
        seq_emb: &Tensor,
        input: NodeInput<'_>,
    ) -> Result<Encoded> {
        let x = self.node_input(seq_emb, input)?;
        let adj = Tensor::from_matrix(&input.graph.adjacency());
        let states = self.gnn_forward(p, &x, &adj)?;
        let fused = self.fuse(p, seq_emb, states.last())?;
        Ok(Encoded {
            seq: seq_emb.clone(),
            states,
            fused,
        })
    }
}

/// All ordered pairs `(i, j)` of `0..n`, row-major.
pub fn ordered_pairs(n: usize) -> (Vec<usize>, Vec<usize>) {
    let mut left = Vec::with_capacity(n * n);
    let mut right = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            left.push(i);
            right.push(j);
        }
    }
    (left, right)
}
