//! Tab-separated training logs.
//!
//! The pretraining log starts with a `#` header naming the columns
//! `step lr l_dis l_angle I eta`, then one line per optimizer step. The
//! distance column is called `l_dis_reg` in the regression arm. Disabled
//! loss terms are written as 0; `I` and `eta` are `-` on steps where the
//! MI term or the inner step was not computed.

use protssl_core::pretrain::StepMetrics;
use protssl_core::TrainConfig;

pub fn pretrain_header(cfg: &TrainConfig) -> String {
    let dis = if cfg.distance_regression {
        "l_dis_reg"
    } else {
        "l_dis"
    };
    format!("# step\tlr\t{dis}\tl_angle\tI\teta\n")
}

fn optional(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

pub fn pretrain_row(m: &StepMetrics) -> String {
    format!(
        "{}\t{}\t{}\t{}\t{}\t{}\n",
        m.step,
        m.lr,
        m.l_dis,
        m.l_angle,
        optional(m.mi),
        optional(m.eta)
    )
}

pub const FINETUNE_HEADER: &str = "# step\tloss\n";

pub fn finetune_row(step: usize, loss: f64) -> String {
    format!("{step}\t{loss}\n")
}

/// Header names and data rows of a log produced by this module.
pub fn parse(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines
        .next()
        .and_then(|h| h.strip_prefix("# "))
        .map(|h| h.split('\t').map(String::from).collect())
        .unwrap_or_default();
    let rows = lines
        .map(|l| l.split('\t').map(String::from).collect())
        .collect();
    (header, rows)
}
