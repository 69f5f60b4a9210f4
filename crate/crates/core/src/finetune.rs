//! Downstream protein classification: a tanh + linear head on mean-pooled
//! fused residue representations, trained with cross-entropy.

use alloc::vec;
use alloc::vec::Vec;
use rand::seq::SliceRandom;

use crate::config::{FinetuneMode, TrainConfig};
use crate::error::{Error, Result};
use crate::graph::ProteinGraph;
use crate::models::Model;
use crate::seed;
use crate::tensor::{cosine_lr, grad, Adam, Lookup, ParamSet, Role, Tensor};

/// One labeled protein.
#[derive(Debug, Clone, Copy)]
pub struct Labeled<'a> {
    pub graph: &'a ProteinGraph,
    pub label: usize,
}

/// Adds a zero-initialized `H×C` classifier head, replacing any existing one.
pub fn init_classifier(params: &mut ParamSet, hidden: usize, classes: usize) {
    params.insert("cls.w", Role::Classifier, &Tensor::zeros(hidden, classes));
    params.insert("cls.b", Role::Classifier, &Tensor::zeros(1, classes));
}

/// Number of classes of the classifier head in `params`.
pub fn classifier_classes(params: &impl Lookup) -> Result<usize> {
    Ok(params.param("cls.b")?.cols())
}

/// Class logits `tanh(mean_i h_i) W + b`, 1×C.
pub fn classifier_logits(model: &Model, p: &impl Lookup, g: &ProteinGraph) -> Result<Tensor> {
    let seq = model.seq_forward(p, g)?;
    let enc = model.encode(p, &seq, g.as_input())?;
    let pooled = enc.fused.col_mean()?.tanh()?;
    let w = p.param("cls.w")?;
    if w.rows() != pooled.cols() {
        return Err(Error::DimensionMismatch {
            what: "cls.w rows".into(),
            expected: pooled.cols(),
            found: w.rows(),
        });
    }
    pooled.linear(w, Some(p.param("cls.b")?))
}

/// Lowest index among the maxima.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn check_labels(data: &[Labeled<'_>], classes: usize) -> Result<()> {
    match data.iter().find(|d| d.label >= classes) {
        Some(d) => Err(Error::LabelOutOfRange {
            label: d.label,
            classes,
        }),
        None => Ok(()),
    }
}

/// Parameters updated by finetuning in `mode`.
pub fn trainable(
    params: &ParamSet,
    mode: FinetuneMode,
) -> (Vec<alloc::string::String>, Vec<Tensor>) {
    match mode {
        FinetuneMode::HeadOnly => params.select(&[Role::Classifier]),
        FinetuneMode::Full => {
            let (mut names, mut tensors) = params.select(&[Role::Gnn, Role::Classifier]);
            if let Some(w) = params.get("fuse.w") {
                names.push("fuse.w".into());
                tensors.push(w.clone());
            }
            (names, tensors)
        }
    }
}

/// Cross-entropy finetuning for `cfg.finetune_epochs` epochs with Adam and a
/// cosine schedule from `cfg.finetune_lr`. Returns the updated parameters and
/// the per-step mean batch loss.
pub fn finetune(
    model: &Model,
    mut params: ParamSet,
    data: &[Labeled<'_>],
    cfg: &TrainConfig,
) -> Result<(ParamSet, Vec<f64>)> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let classes = classifier_classes(&params)?;
    check_labels(data, classes)?;
    let batches = data.len().div_ceil(cfg.batch);
    let total = (cfg.finetune_epochs * batches) as u64;
    let mut adam = Adam::new(cfg.beta1, cfg.beta2, cfg.adam_eps);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut losses = Vec::with_capacity(total as usize);
    let mut step = 0u64;
    for epoch in 0..cfg.finetune_epochs as u64 {
        order.sort_unstable();
        order.shuffle(&mut seed::rng(seed::stream_seed(
            cfg.seed, "finetune", epoch,
        )));
        for chunk in order.chunks(cfg.batch) {
            let (names, tensors) = trainable(&params, cfg.finetune_mode);
            let mut total_loss: Option<Tensor> = None;
            for &k in chunk {
                let item = data[k];
                let logp = classifier_logits(model, &params, item.graph)?.log_softmax()?;
                let mut onehot = vec![0.0; classes];
                onehot[item.label] = 1.0;
                let ce = Tensor::new(1, classes, onehot)?.mul(&logp)?.sum()?.neg()?;
                total_loss = Some(match total_loss {
                    Some(acc) => acc.add(&ce)?,
                    None => ce,
                });
            }
            let loss = total_loss
                .expect("chunks are non-empty")
                .scale(1.0 / chunk.len() as f64)?;
            let g = grad(&loss, &tensors, false)?;
            let lr = cosine_lr(step, total, cfg.finetune_lr);
            adam.step(&mut params, &names, g.as_slice(), lr)?;
            losses.push(loss.item());
            step += 1;
        }
    }
    Ok((params, losses))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassCounts {
    /// Proteins whose true label is this class.
    pub support: usize,
    /// Proteins predicted as this class.
    pub predicted: usize,
    /// Correct predictions of this class.
    pub correct: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    pub per_class: Vec<ClassCounts>,
}

/// Micro accuracy and per-class counts from `(prediction, label)` pairs.
pub fn score(pairs: &[(usize, usize)], classes: usize) -> Result<EvalReport> {
    if pairs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut per_class = vec![ClassCounts::default(); classes];
    let mut correct = 0;
    for &(pred, label) in pairs {
        if label >= classes {
            return Err(Error::LabelOutOfRange { label, classes });
        }
        per_class[label].support += 1;
        per_class[pred].predicted += 1;
        if pred == label {
            per_class[label].correct += 1;
            correct += 1;
        }
    }
    Ok(EvalReport {
        accuracy: correct as f64 / pairs.len() as f64,
        correct,
        total: pairs.len(),
        per_class,
    })
}

/// Predicts every protein and scores against its label.
pub fn evaluate(model: &Model, params: &impl Lookup, data: &[Labeled<'_>]) -> Result<EvalReport> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let classes = classifier_classes(params)?;
    check_labels(data, classes)?;
    let pairs = data
        .iter()
        .map(|d| {
            let logits = classifier_logits(model, params, d.graph)?;
            Ok((argmax(logits.data()), d.label))
        })
        .collect::<Result<Vec<_>>>()?;
    score(&pairs, classes)
}
