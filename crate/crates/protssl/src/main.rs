use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use protssl::commands;
use protssl::config;
use protssl::core::TrainConfig;
use protssl::Error;

/// Structure-aware protein pretraining, finetuning and gradient checks.
///
/// Configuration precedence, lowest first: built-in defaults, --config
/// file, --set KEY=VALUE in order, dedicated flags.
#[derive(Parser)]
#[command(name = "protssl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// key=value configuration file.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct Training {
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    /// Learning rate for the GNN and heads.
    #[arg(long)]
    lr: Option<f64>,
    /// Inner step size on the sequence encoder.
    #[arg(long)]
    eta: Option<f64>,
    /// toy or frozen.
    #[arg(long)]
    seq_mode: Option<String>,
    #[arg(long)]
    no_mutual: bool,
    #[arg(long)]
    no_bilevel: bool,
    #[arg(long)]
    no_angle: bool,
    #[arg(long)]
    no_distance: bool,
    #[arg(long)]
    distance_regression: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Featurize PDB files into graph caches.
    Parse {
        #[arg(required = true, value_name = "PDB")]
        inputs: Vec<PathBuf>,
        /// Output directory for `<id>.sgr` caches.
        #[arg(long)]
        out: PathBuf,
        /// Chain to read; the first chain in each file by default.
        #[arg(long)]
        chain: Option<char>,
        /// SEM1 file with frozen per-residue embeddings keyed by file stem.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Pretrain on a directory of graph caches.
    Pretrain {
        #[arg(long)]
        cache: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        training: Training,
    },
    /// Finetune a checkpoint on a labeled manifest.
    Finetune {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        cache: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Update only the classifier head.
        #[arg(long)]
        head_only: bool,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Report accuracy of a finetuned checkpoint.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        cache: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Directory for the report and resolved config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Finite-difference check of every op, model loss and the bi-level step.
    Gradcheck {
        /// Number of consecutive seeds starting at the configured seed.
        #[arg(long, default_value_t = 20)]
        seeds: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

fn resolve(common: &Common, mut flags: Vec<(&'static str, String)>) -> Result<TrainConfig, Error> {
    if let Some(s) = common.seed {
        flags.insert(0, ("seed", s.to_string()));
    }
    config::resolve(common.config.as_deref(), &common.sets, &flags)
}

fn training_flags(t: &Training) -> Vec<(&'static str, String)> {
    let mut f = Vec::new();
    let mut opt = |key: &'static str, v: Option<String>| {
        if let Some(v) = v {
            f.push((key, v));
        }
    };
    opt("epochs", t.epochs.map(|v| v.to_string()));
    opt("batch", t.batch.map(|v| v.to_string()));
    opt("lr", t.lr.map(|v| v.to_string()));
    opt("eta", t.eta.map(|v| v.to_string()));
    opt("seq_mode", t.seq_mode.clone());
    for (key, on) in [
        ("no_mutual", t.no_mutual),
        ("no_bilevel", t.no_bilevel),
        ("no_angle", t.no_angle),
        ("no_distance", t.no_distance),
        ("distance_regression", t.distance_regression),
    ] {
        if on {
            f.push((key, "true".into()));
        }
    }
    f
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Parse {
            inputs,
            out,
            chain,
            embeddings,
            common,
        } => {
            let cfg = resolve(&common, Vec::new())?;
            let outcome = commands::parse(&inputs, &out, &cfg, chain, embeddings.as_deref())?;
            for (path, e) in &outcome.failures {
                eprintln!("error: {}: {e}", path.display());
            }
            println!(
                "wrote {} cache(s) to {}; {} file(s) failed; {} incomplete residue(s) dropped",
                outcome.written.len(),
                out.display(),
                outcome.failures.len(),
                outcome.dropped
            );
            Ok(outcome.failures.is_empty())
        }
        Command::Pretrain {
            cache,
            out,
            common,
            training,
        } => {
            let cfg = resolve(&common, training_flags(&training))?;
            let o = commands::pretrain(&cache, &out, &cfg)?;
            println!(
                "pretrained on {} protein(s) for {} step(s); checkpoint {}; log {}",
                o.proteins,
                o.steps,
                o.checkpoint.display(),
                o.log.display()
            );
            Ok(true)
        }
        Command::Finetune {
            manifest,
            cache,
            checkpoint,
            out,
            head_only,
            epochs,
            lr,
            common,
        } => {
            let mut flags = Vec::new();
            if let Some(e) = epochs {
                flags.push(("finetune_epochs", e.to_string()));
            }
            if let Some(lr) = lr {
                flags.push(("finetune_lr", lr.to_string()));
            }
            if head_only {
                flags.push(("finetune_mode", "head-only".into()));
            }
            let cfg = resolve(&common, flags)?;
            let o = commands::finetune(&manifest, &cache, &checkpoint, &out, &cfg)?;
            println!(
                "train accuracy {} ({}/{}); checkpoint {}",
                o.train.accuracy,
                o.train.correct,
                o.train.total,
                o.checkpoint.display()
            );
            Ok(true)
        }
        Command::Eval {
            manifest,
            cache,
            checkpoint,
            out,
            common,
        } => {
            let cfg = resolve(&common, Vec::new())?;
            let report = commands::eval(&manifest, &cache, &checkpoint, out.as_deref(), &cfg)?;
            print!("{}", commands::render_report(&report));
            Ok(true)
        }
        Command::Gradcheck { seeds, out, common } => {
            let cfg = resolve(&common, Vec::new())?;
            let summary = commands::gradcheck(cfg.seed, seeds, out.as_deref(), &cfg)?;
            print!("{}", commands::render_gradcheck(&summary));
            Ok(summary.passed())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ Error::Usage(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
