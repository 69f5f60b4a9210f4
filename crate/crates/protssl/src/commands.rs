//! The five commands, callable without the argument parser.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use protssl_core::finetune::{self, classifier_classes, init_classifier, EvalReport, Labeled};
use protssl_core::gradcheck::{
    self, check_bilevel_toy, GradcheckReport, SECOND_ORDER_TOLERANCE, TOLERANCE,
};
use protssl_core::graph::build_graph;
use protssl_core::models::{Model, ModelConfig};
use protssl_core::pretrain::pretrain_run;
use protssl_core::{Matrix, ProteinGraph, RbfConfig, TrainConfig};

use crate::error::{Error, Result};
use crate::{cache, checkpoint, config, embeddings, manifest, metrics, pdb, write_atomic};

pub const CHECKPOINT_FILE: &str = "checkpoint.spm";
pub const METRICS_FILE: &str = "metrics.tsv";
pub const FINETUNED_FILE: &str = "finetuned.spm";
pub const FINETUNE_LOG_FILE: &str = "finetune.tsv";
pub const REPORT_FILE: &str = "report.txt";
pub const GRADCHECK_FILE: &str = "gradcheck.txt";

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

#[derive(Debug, Default)]
pub struct ParseOutcome {
    pub written: Vec<PathBuf>,
    pub failures: Vec<(PathBuf, Error)>,
    /// Residues dropped across all files for missing backbone atoms.
    pub dropped: usize,
}

fn parse_one(
    path: &Path,
    cfg: &TrainConfig,
    chain: Option<char>,
    table: Option<&protssl_core::models::EmbeddingTable>,
    rbf: &RbfConfig,
) -> Result<(ProteinGraph, usize)> {
    let id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::Usage(format!("{}: cannot derive a protein id", path.display())))?;
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parsed = pdb::parse_pdb(&text, id, chain)?;
    let emb = match table {
        Some(t) => t.lookup(id)?.clone(),
        None => Matrix::zeros(parsed.structure.len(), 0),
    };
    let g = build_graph(&parsed.structure, &emb, cfg.threshold, rbf)?;
    Ok((g, parsed.dropped))
}

/// Featurizes each PDB file into `<out>/<file stem>.sgr`. Failures are
/// collected per file and do not stop the run.
pub fn parse(
    inputs: &[PathBuf],
    out: &Path,
    cfg: &TrainConfig,
    chain: Option<char>,
    embeddings_path: Option<&Path>,
) -> Result<ParseOutcome> {
    if inputs.is_empty() {
        return Err(Error::Usage("no PDB files given".into()));
    }
    let rbf = RbfConfig::uniform(cfg.rbf_count, cfg.rbf_gamma)?;
    let table = embeddings_path.map(embeddings::load).transpose()?;
    create_dir(out)?;
    let mut outcome = ParseOutcome::default();
    let mut ids = BTreeMap::new();
    for path in inputs {
        let result = parse_one(path, cfg, chain, table.as_ref(), &rbf).and_then(|(g, dropped)| {
            if let Some(first) = ids.insert(g.id.clone(), path.clone()) {
                return Err(Error::Usage(format!(
                    "id {} already taken by {}",
                    g.id,
                    first.display()
                )));
            }
            let target = cache::cache_path(out, &g.id);
            cache::write(&target, &g)?;
            Ok((target, dropped))
        });
        match result {
            Ok((target, dropped)) => {
                outcome.written.push(target);
                outcome.dropped += dropped;
            }
            Err(e) => outcome.failures.push((path.clone(), e)),
        }
    }
    config::write_resolved(out, cfg)?;
    Ok(outcome)
}

#[derive(Debug)]
pub struct PretrainOutcome {
    pub proteins: usize,
    pub steps: usize,
    pub checkpoint: PathBuf,
    pub log: PathBuf,
}

/// Pretrains on every cache in `cache_dir`; writes the checkpoint, the
/// metrics log and the resolved config into `out`.
pub fn pretrain(cache_dir: &Path, out: &Path, cfg: &TrainConfig) -> Result<PretrainOutcome> {
    let graphs = cache::read_dir(cache_dir)?;
    let mut log = metrics::pretrain_header(cfg);
    let mut steps = 0;
    let params = pretrain_run(&graphs, cfg, |m| {
        log.push_str(&metrics::pretrain_row(m));
        steps += 1;
    })?;
    create_dir(out)?;
    let outcome = PretrainOutcome {
        proteins: graphs.len(),
        steps,
        checkpoint: out.join(CHECKPOINT_FILE),
        log: out.join(METRICS_FILE),
    };
    checkpoint::save(&outcome.checkpoint, &params)?;
    write_atomic(&outcome.log, log.as_bytes())?;
    config::write_resolved(out, cfg)?;
    Ok(outcome)
}

struct Loaded {
    model: Model,
    params: protssl_core::ParamSet,
    entries: Vec<manifest::Entry>,
    graphs: Vec<ProteinGraph>,
}

fn load_labeled(
    manifest_path: &Path,
    cache_dir: &Path,
    checkpoint_path: &Path,
    cfg: &TrainConfig,
) -> Result<Loaded> {
    let entries = manifest::load(manifest_path)?;
    if entries.is_empty() {
        return Err(protssl_core::Error::EmptyDataset.into());
    }
    let graphs = manifest::load_graphs(&entries, cache_dir)?;
    let model = Model::new(ModelConfig::from_train(cfg))?;
    let params = checkpoint::load(checkpoint_path)?;
    model.check_params(&params)?;
    Ok(Loaded {
        model,
        params,
        entries,
        graphs,
    })
}

fn labeled<'a>(entries: &[manifest::Entry], graphs: &'a [ProteinGraph]) -> Vec<Labeled<'a>> {
    entries
        .iter()
        .zip(graphs)
        .map(|(e, graph)| Labeled {
            graph,
            label: e.label,
        })
        .collect()
}

/// Micro accuracy, then per-class support, prediction and hit counts.
pub fn render_report(r: &EvalReport) -> String {
    let mut out = format!(
        "accuracy\t{}\ncorrect\t{}\ntotal\t{}\n# class\tsupport\tpredicted\tcorrect\n",
        r.accuracy, r.correct, r.total
    );
    for (c, k) in r.per_class.iter().enumerate() {
        out.push_str(&format!(
            "{c}\t{}\t{}\t{}\n",
            k.support, k.predicted, k.correct
        ));
    }
    out
}

#[derive(Debug)]
pub struct FinetuneOutcome {
    pub checkpoint: PathBuf,
    /// Accuracy on the training set after finetuning.
    pub train: EvalReport,
}

/// Finetunes a checkpoint on a labeled manifest. A classifier head is added
/// when the checkpoint has none, with `num_classes` classes or, when that
/// is 0, as many as the labels need.
pub fn finetune(
    manifest_path: &Path,
    cache_dir: &Path,
    checkpoint_path: &Path,
    out: &Path,
    cfg: &TrainConfig,
) -> Result<FinetuneOutcome> {
    let Loaded {
        model,
        mut params,
        entries,
        graphs,
    } = load_labeled(manifest_path, cache_dir, checkpoint_path, cfg)?;
    if classifier_classes(&params).is_err() {
        let classes = match cfg.num_classes {
            0 => manifest::class_count(&entries),
            n => n,
        };
        init_classifier(&mut params, cfg.hidden, classes);
    }
    let data = labeled(&entries, &graphs);
    let (params, losses) = finetune::finetune(&model, params, &data, cfg)?;
    let train = finetune::evaluate(&model, &params, &data)?;

    create_dir(out)?;
    let target = out.join(FINETUNED_FILE);
    checkpoint::save(&target, &params)?;
    let mut log = metrics::FINETUNE_HEADER.to_string();
    for (k, l) in losses.iter().enumerate() {
        log.push_str(&metrics::finetune_row(k, *l));
    }
    write_atomic(&out.join(FINETUNE_LOG_FILE), log.as_bytes())?;
    write_atomic(&out.join(REPORT_FILE), render_report(&train).as_bytes())?;
    config::write_resolved(out, cfg)?;
    Ok(FinetuneOutcome {
        checkpoint: target,
        train,
    })
}

/// Scores a finetuned checkpoint; with `out` set the report and resolved
/// config are written there.
pub fn eval(
    manifest_path: &Path,
    cache_dir: &Path,
    checkpoint_path: &Path,
    out: Option<&Path>,
    cfg: &TrainConfig,
) -> Result<EvalReport> {
    let Loaded {
        model,
        params,
        entries,
        graphs,
    } = load_labeled(manifest_path, cache_dir, checkpoint_path, cfg)?;
    let report = finetune::evaluate(&model, &params, &labeled(&entries, &graphs))?;
    if let Some(dir) = out {
        create_dir(dir)?;
        write_atomic(&dir.join(REPORT_FILE), render_report(&report).as_bytes())?;
        config::write_resolved(dir, cfg)?;
    }
    Ok(report)
}

/// Worst result of one named check across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckSummary {
    pub name: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub coords: usize,
    pub skipped: usize,
}

impl CheckSummary {
    pub fn passed(&self) -> bool {
        self.max_error < self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckSummary {
    pub seeds: Vec<u64>,
    pub checks: Vec<CheckSummary>,
    /// Smallest `‖g(η) − g(0)‖ / ‖g(0)‖` of the closed-form bi-level toy.
    pub min_norm_ratio: f64,
}

impl GradcheckSummary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckSummary::passed) && self.min_norm_ratio > 1e-3
    }
}

/// Folds per-seed reports into one row per check, keeping first-seen order.
pub fn summarize(reports: &[GradcheckReport], min_norm_ratio: f64) -> GradcheckSummary {
    let mut checks: Vec<CheckSummary> = Vec::new();
    for report in reports {
        for r in &report.results {
            let tolerance = if r.name.starts_with("bilevel") {
                SECOND_ORDER_TOLERANCE
            } else {
                TOLERANCE
            };
            match checks.iter_mut().find(|c| c.name == r.name) {
                Some(c) => {
                    c.max_error = c.max_error.max(r.max_error);
                    c.coords += r.coords;
                    c.skipped += r.skipped;
                }
                None => checks.push(CheckSummary {
                    name: r.name.clone(),
                    max_error: r.max_error,
                    tolerance,
                    coords: r.coords,
                    skipped: r.skipped,
                }),
            }
        }
    }
    GradcheckSummary {
        seeds: reports.iter().map(|r| r.seed).collect(),
        checks,
        min_norm_ratio,
    }
}

fn suite(seed: u64) -> Result<(GradcheckReport, f64)> {
    let report = gradcheck::run_suite(seed)?;
    let toy = check_bilevel_toy(seed, 0.5)?;
    Ok((report, toy.norm_ratio))
}

/// Runs the finite-difference suite for `count` consecutive seeds from
/// `first_seed`, spread over the available cores.
pub fn gradcheck(
    first_seed: u64,
    count: usize,
    out: Option<&Path>,
    cfg: &TrainConfig,
) -> Result<GradcheckSummary> {
    if count == 0 {
        return Err(Error::Usage("at least one seed is needed".into()));
    }
    let seeds: Vec<u64> = (0..count as u64)
        .map(|k| first_seed.wrapping_add(k))
        .collect();
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(count);
    let chunk = count.div_ceil(workers);
    let results: Vec<Result<(GradcheckReport, f64)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(|&s| suite(s)).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("gradcheck worker panicked"))
            .collect()
    });
    let mut reports = Vec::with_capacity(count);
    let mut min_ratio = f64::INFINITY;
    for r in results {
        let (report, ratio) = r?;
        reports.push(report);
        min_ratio = min_ratio.min(ratio);
    }
    let summary = summarize(&reports, min_ratio);
    if let Some(dir) = out {
        create_dir(dir)?;
        write_atomic(
            &dir.join(GRADCHECK_FILE),
            render_gradcheck(&summary).as_bytes(),
        )?;
        config::write_resolved(dir, cfg)?;
    }
    Ok(summary)
}

pub fn render_gradcheck(s: &GradcheckSummary) -> String {
    let seeds = match (s.seeds.first(), s.seeds.last()) {
        (Some(a), Some(b)) => format!("{a}..={b}"),
        _ => "none".into(),
    };
    let mut out = format!(
        "# seeds {seeds} ({} runs)\n# check\tmax_rel_error\ttolerance\tcoords\tskipped\tstatus\n",
        s.seeds.len()
    );
    for c in &s.checks {
        let status = if c.passed() { "PASS" } else { "FAIL" };
        out.push_str(&format!(
            "{}\t{:.3e}\t{:.0e}\t{}\t{}\t{status}\n",
            c.name, c.max_error, c.tolerance, c.coords, c.skipped
        ));
    }
    let status = if s.min_norm_ratio > 1e-3 {
        "PASS"
    } else {
        "FAIL"
    };
    out.push_str(&format!(
        "bilevel toy norm ratio (min)\t{:.3e}\t>1e-3\t-\t-\t{status}\n",
        s.min_norm_ratio
    ));
    out.push_str(if s.passed() {
        "overall\tPASS\n"
    } else {
        "overall\tFAIL\n"
    });
    out
}
