//! One optimization step and the epoch loop.
//!
//! With the bi-level step enabled, each step
//! 1. evaluates the MI objective `I(θ, ω)` on the batch,
//! 2. forms `θ' = θ + η ∂I/∂θ` keeping the graph, so `θ'` is a function of ω,
//! 3. evaluates the pretext loss `L(θ', ω, α)`,
//! 4. updates ω and α with Adam on `∂L/∂ω` and `∂L/∂α` through the inner step,
//! 5. drops `θ'`, and
//! 6. updates the critic by Adam ascent on `I`.
//!
//! The persisted sequence parameters are never written.

use alloc::vec::Vec;
use rand::seq::SliceRandom;

use super::{angle_loss, distance_loss, distance_loss_regression, mi_objective, BinSpec};
use crate::config::TrainConfig;
use crate::error::{Error, Result};
use crate::graph::{mask_graph, ProteinGraph};
use crate::models::{Model, ModelConfig};
use crate::seed;
use crate::tensor::{cosine_lr, grad, Adam, Lookup, Overlay, ParamSet, Role, Tensor};

/// One row of the metrics log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepMetrics {
    pub step: u64,
    pub lr: f64,
    /// Distance term (classification or regression); 0 when disabled.
    pub l_dis: f64,
    /// Angle term; 0 when disabled.
    pub l_angle: f64,
    /// MI estimate; `None` when not computed for this step.
    pub mi: Option<f64>,
    /// Inner step size on the sequence encoder; `None` when no inner step was taken.
    pub eta: Option<f64>,
}

/// `θ + η ∂I/∂θ` with the gradient kept differentiable.
pub fn inner_step(theta: &[Tensor], mi: &Tensor, eta: f64) -> Result<Vec<Tensor>> {
    let g = grad(mi, theta, true)?;
    theta
        .iter()
        .zip(g.as_slice())
        .map(|(t, g)| t.add(&g.scale(eta)?))
        .collect()
}

#[derive(Debug, Clone)]
pub struct Pretrainer {
    cfg: TrainConfig,
    model: Model,
    bins: BinSpec,
    params: ParamSet,
    outer: Adam,
    critic: Adam,
    step: u64,
    total_steps: u64,
}

impl Pretrainer {
    pub fn new(cfg: TrainConfig, total_steps: u64) -> Result<Self> {
        let model = Model::new(ModelConfig::from_train(&cfg))?;
        let params = model.init_params(cfg.seed);
        Self::with_params(cfg, params, total_steps)
    }

    pub fn with_params(cfg: TrainConfig, params: ParamSet, total_steps: u64) -> Result<Self> {
        cfg.validate()?;
        let model = Model::new(ModelConfig::from_train(&cfg))?;
        let bins = BinSpec::new(cfg.bins, cfg.bin_lo, cfg.bin_hi)?;
        let adam = Adam::new(cfg.beta1, cfg.beta2, cfg.adam_eps);
        Ok(Self {
            model,
            bins,
            params,
            outer: adam.clone(),
            critic: adam,
            step: 0,
            total_steps,
            cfg,
        })
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn into_params(self) -> ParamSet {
        self.params
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Batch MI objective under parameters `p`.
    pub fn batch_mi(&self, p: &impl Lookup, batch: &[&ProteinGraph]) -> Result<Tensor> {
        let mut seq_reprs = Vec::with_capacity(batch.len());
        let mut graph_reprs = Vec::with_capacity(batch.len());
        for g in batch {
            let seq = self.model.seq_forward(p, g)?;
            let enc = self.model.encode(p, &seq, g.as_input())?;
            seq_reprs.push(seq.col_mean()?);
            graph_reprs.push(enc.states.graph_repr()?);
        }
        let s: Vec<&Tensor> = seq_reprs.iter().collect();
        let h: Vec<&Tensor> = graph_reprs.iter().collect();
        mi_objective(
            &self.model,
            p,
            &Tensor::concat_rows(&s)?,
            &Tensor::concat_rows(&h)?,
        )
    }

    /// Batch pretext loss `mean_b(l_dis + l_angle)` and the two batch-mean terms.
    pub fn batch_ssl_loss(
        &self,
        p: &impl Lookup,
        batch: &[&ProteinGraph],
        epoch: u64,
    ) -> Result<(Tensor, f64, f64)> {
        if batch.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let scale = 1.0 / batch.len() as f64;
        let mut total: Option<Tensor> = None;
        let (mut dis_sum, mut ang_sum) = (0.0, 0.0);
        for g in batch {
            let seq = self.model.seq_forward(p, g)?;
            let mut terms: Vec<Tensor> = Vec::with_capacity(2);
            if !self.cfg.no_distance {
                let enc = self.model.encode(p, &seq, g.as_input())?;
                let l = if self.cfg.distance_regression {
                    distance_loss_regression(&self.model, p, g, &enc.fused, self.cfg.threshold)?
                } else {
                    distance_loss(&self.model, p, g, &enc.fused, &self.bins)?
                };
                dis_sum += l.item();
                terms.push(l);
            }
            if !self.cfg.no_angle {
                let mg = mask_graph(
                    g,
                    self.cfg.mask_ratio,
                    seed::mask_seed(self.cfg.seed, &g.id, epoch),
                )?;
                let enc = self.model.encode(p, &seq, mg.as_input())?;
                let l = angle_loss(&self.model, p, &mg, &enc.fused)?;
                ang_sum += l.item();
                terms.push(l);
            }
            for t in terms {
                total = Some(match total {
                    Some(acc) => acc.add(&t)?,
                    None => t,
                });
            }
        }
        let total = total.ok_or_else(|| Error::InvalidConfig("no pretext term enabled".into()))?;
        Ok((total.scale(scale)?, dis_sum * scale, ang_sum * scale))
    }

    /// One update on `batch`. Takes the bi-level path when the config enables it.
    pub fn step(&mut self, batch: &[&ProteinGraph], epoch: u64) -> Result<StepMetrics> {
        let lr = cosine_lr(self.step, self.total_steps, self.cfg.lr);
        let eta = cosine_lr(self.step, self.total_steps, self.cfg.eta);

        let (seq_names, seq_params) = self.params.select(&[Role::Sequence]);
        let (outer_names, outer_params) = self.params.select(&[Role::Gnn, Role::Heads]);
        let (disc_names, disc_params) = self.params.select(&[Role::Discriminator]);

        let mi_active = self.cfg.uses_mutual() && batch.len() >= 2;
        let bilevel = mi_active && self.cfg.uses_bilevel() && !seq_params.is_empty();

        let mut mi_value = None;
        let mut critic_grads = Vec::new();
        let mut overlay = Overlay::new(&self.params);
        if mi_active {
            let mi = self.batch_mi(&self.params, batch)?;
            critic_grads = grad(&mi, &disc_params, false)?.into_vec();
            if bilevel {
                for (name, t) in seq_names.iter().zip(inner_step(&seq_params, &mi, eta)?) {
                    overlay = overlay.with(name.clone(), t);
                }
            }
            mi_value = Some(mi.item());
        }

        let (loss, l_dis, l_angle) = self.batch_ssl_loss(&overlay, batch, epoch)?;
        let outer_grads = grad(&loss, &outer_params, false)?;
        drop(overlay);

        self.outer
            .step(&mut self.params, &outer_names, outer_grads.as_slice(), lr)?;
        if mi_value.is_some() {
            self.critic
                .ascend(&mut self.params, &disc_names, &critic_grads, lr)?;
        }

        let metrics = StepMetrics {
            step: self.step,
            lr,
            l_dis,
            l_angle,
            mi: mi_value,
            eta: bilevel.then_some(eta),
        };
        self.step += 1;
        Ok(metrics)
    }
}

/// Runs `cfg.epochs` epochs over `dataset`, reshuffled each epoch, calling
/// `on_step` after every update. Returns the final parameters.
pub fn pretrain_run(
    dataset: &[ProteinGraph],
    cfg: &TrainConfig,
    mut on_step: impl FnMut(&StepMetrics),
) -> Result<ParamSet> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let batches_per_epoch = dataset.len().div_ceil(cfg.batch);
    let total = (cfg.epochs * batches_per_epoch) as u64;
    let mut trainer = Pretrainer::new(cfg.clone(), total)?;
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    for epoch in 0..cfg.epochs as u64 {
        order.sort_unstable();
        order.shuffle(&mut seed::rng(seed::stream_seed(
            cfg.seed, "shuffle", epoch,
        )));
        for chunk in order.chunks(cfg.batch) {
            let batch: Vec<&ProteinGraph> = chunk.iter().map(|&i| &dataset[i]).collect();
            let m = trainer.step(&batch, epoch)?;
            on_step(&m);
        }
    }
    Ok(trainer.into_params())
}
