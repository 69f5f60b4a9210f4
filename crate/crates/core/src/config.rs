//! Hyperparameters and ablation switches for pretraining and finetuning.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeqMode {
    /// Small trainable attention encoder.
    Toy,
    /// Embeddings imported at featurization time; no sequence parameters.
    Frozen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FinetuneMode {
    /// GNN, fusion projection and classifier head are updated.
    Full,
    /// Only the classifier head is updated.
    HeadOnly,
}

impl fmt::Display for SeqMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeqMode::Toy => "toy",
            SeqMode::Frozen => "frozen",
        })
    }
}

impl FromStr for SeqMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "toy" => Ok(SeqMode::Toy),
            "frozen" => Ok(SeqMode::Frozen),
            _ => Err(Error::InvalidConfig(format!("unknown seq_mode {s:?}"))),
        }
    }
}

impl fmt::Display for FinetuneMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FinetuneMode::Full => "full",
            FinetuneMode::HeadOnly => "head-only",
        })
    }
}

impl FromStr for FinetuneMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(FinetuneMode::Full),
            "head-only" | "head_only" | "head" => Ok(FinetuneMode::HeadOnly),
            _ => Err(Error::InvalidConfig(format!("unknown finetune_mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub layers: usize,
    pub hidden: usize,
    pub seq_dim: usize,
    pub disc_dim: usize,
    pub bins: usize,
    /// Edge threshold in Å (strict).
    pub threshold: f64,
    pub mask_ratio: f64,
    pub rbf_gamma: f64,
    pub rbf_count: usize,
    pub bin_lo: f64,
    pub bin_hi: f64,
    /// Inner ascent step size on the sequence encoder.
    pub eta: f64,
    /// Outer learning rate for GNN and heads.
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
    pub finetune_epochs: usize,
    pub finetune_lr: f64,
    pub finetune_mode: FinetuneMode,
    /// Downstream class count; 0 infers it from the training labels.
    pub num_classes: usize,
    pub seq_mode: SeqMode,
    pub no_mutual: bool,
    pub no_bilevel: bool,
    pub no_angle: bool,
    pub no_distance: bool,
    pub distance_regression: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            layers: 2,
            hidden: 64,
            seq_dim: 32,
            disc_dim: 32,
            bins: 30,
            threshold: 7.0,
            mask_ratio: 0.15,
            rbf_gamma: 10.0,
            rbf_count: 16,
            bin_lo: 2.0,
            bin_hi: 22.0,
            eta: 5e-5,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            epochs: 10,
            batch: 4,
            seed: 0,
            finetune_epochs: 5,
            finetune_lr: 1e-4,
            finetune_mode: FinetuneMode::Full,
            num_classes: 0,
            seq_mode: SeqMode::Toy,
            no_mutual: false,
            no_bilevel: false,
            no_angle: false,
            no_distance: false,
            distance_regression: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("bad value {value:?} for {key}")))
}

impl TrainConfig {
    /// Every field as `(key, value)` in a fixed order.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        alloc::vec![
            ("layers", self.layers.to_string()),
            ("hidden", self.hidden.to_string()),
            ("seq_dim", self.seq_dim.to_string()),
            ("disc_dim", self.disc_dim.to_string()),
            ("bins", self.bins.to_string()),
            ("threshold", self.threshold.to_string()),
            ("mask_ratio", self.mask_ratio.to_string()),
            ("rbf_gamma", self.rbf_gamma.to_string()),
            ("rbf_count", self.rbf_count.to_string()),
            ("bin_lo", self.bin_lo.to_string()),
            ("bin_hi", self.bin_hi.to_string()),
            ("eta", self.eta.to_string()),
            ("lr", self.lr.to_string()),
            ("beta1", self.beta1.to_string()),
            ("beta2", self.beta2.to_string()),
            ("adam_eps", self.adam_eps.to_string()),
            ("epochs", self.epochs.to_string()),
            ("batch", self.batch.to_string()),
            ("seed", self.seed.to_string()),
            ("finetune_epochs", self.finetune_epochs.to_string()),
            ("finetune_lr", self.finetune_lr.to_string()),
            ("finetune_mode", self.finetune_mode.to_string()),
            ("num_classes", self.num_classes.to_string()),
            ("seq_mode", self.seq_mode.to_string()),
            ("no_mutual", self.no_mutual.to_string()),
            ("no_bilevel", self.no_bilevel.to_string()),
            ("no_angle", self.no_angle.to_string()),
            ("no_distance", self.no_distance.to_string()),
            ("distance_regression", self.distance_regression.to_string()),
        ]
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "layers" => self.layers = parse(key, value)?,
            "hidden" => self.hidden = parse(key, value)?,
            "seq_dim" => self.seq_dim = parse(key, value)?,
            "disc_dim" => self.disc_dim = parse(key, value)?,
            "bins" => self.bins = parse(key, value)?,
            "threshold" => self.threshold = parse(key, value)?,
            "mask_ratio" => self.mask_ratio = parse(key, value)?,
            "rbf_gamma" => self.rbf_gamma = parse(key, value)?,
            "rbf_count" => self.rbf_count = parse(key, value)?,
            "bin_lo" => self.bin_lo = parse(key, value)?,
            "bin_hi" => self.bin_hi = parse(key, value)?,
            "eta" => self.eta = parse(key, value)?,
            "lr" => self.lr = parse(key, value)?,
            "beta1" => self.beta1 = parse(key, value)?,
            "beta2" => self.beta2 = parse(key, value)?,
            "adam_eps" => self.adam_eps = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "batch" => self.batch = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "finetune_epochs" => self.finetune_epochs = parse(key, value)?,
            "finetune_lr" => self.finetune_lr = parse(key, value)?,
            "finetune_mode" => self.finetune_mode = value.trim().parse()?,
            "num_classes" => self.num_classes = parse(key, value)?,
            "seq_mode" => self.seq_mode = value.trim().parse()?,
            "no_mutual" => self.no_mutual = parse(key, value)?,
            "no_bilevel" => self.no_bilevel = parse(key, value)?,
            "no_angle" => self.no_angle = parse(key, value)?,
            "no_distance" => self.no_distance = parse(key, value)?,
            "distance_regression" => self.distance_regression = parse(key, value)?,
            _ => return Err(Error::InvalidConfig(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Mutual information is estimated (and the critic trained).
    pub fn uses_mutual(&self) -> bool {
        !self.no_mutual
    }

    /// The inner ascent step on the sequence encoder is taken.
    pub fn uses_bilevel(&self) -> bool {
        !self.no_mutual && !self.no_bilevel
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.layers == 0 || self.hidden == 0 || self.seq_dim == 0 || self.disc_dim == 0 {
            return bad("layers, hidden, seq_dim and disc_dim must be positive");
        }
        if self.bins < 2 {
            return bad("bins must be at least 2");
        }
        if self.rbf_count < 2 || !(self.rbf_gamma > 0.0) {
            return bad("rbf needs at least 2 centers and a positive gamma");
        }
        if !(self.threshold > 0.0) {
            return bad("threshold must be positive");
        }
        if !(self.mask_ratio > 0.0 && self.mask_ratio < 1.0) {
            return bad("mask_ratio must lie in (0, 1)");
        }
        if !(self.bin_lo < self.bin_hi) {
            return bad("bin_lo must be below bin_hi");
        }
        if self.batch == 0 {
            return bad("batch must be at least 1");
        }
        if !(self.eta >= 0.0 && self.lr >= 0.0 && self.finetune_lr >= 0.0) {
            return bad("learning rates must be non-negative");
        }
        if self.no_angle && self.no_distance {
            return bad("no_angle and no_distance together leave nothing to train");
        }
        if self.uses_bilevel() && self.seq_mode == SeqMode::Frozen {
            return bad("the bi-level step needs the trainable toy sequence encoder; set no_bilevel or seq_mode=toy");
        }
        Ok(())
    }
}
