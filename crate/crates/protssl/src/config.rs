//! Flat `key=value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored; whitespace around
//! keys and values is trimmed. Values are resolved in increasing priority:
//! built-in defaults, the config file, `--set key=value` pairs in command
//! line order, then dedicated flags such as `--seed` or `--no-mutual`.

use std::fs;
use std::path::Path;

use protssl_core::TrainConfig;

use crate::error::{Error, Result};

/// One `key=value` assignment and where it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub key: String,
    pub value: String,
    pub source: String,
    pub line: usize,
}

pub fn parse_text(text: &str, source: &str) -> Result<Vec<Assignment>> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(parse_assignment(line, source, k + 1)?);
    }
    Ok(out)
}

pub fn parse_assignment(text: &str, source: &str, line: usize) -> Result<Assignment> {
    let Some((key, value)) = text.split_once('=') else {
        return Err(Error::Parse {
            source_name: source.into(),
            line,
            reason: format!("expected key=value, found {text:?}"),
        });
    };
    Ok(Assignment {
        key: key.trim().into(),
        value: value.trim().into(),
        source: source.into(),
        line,
    })
}

pub fn apply(cfg: &mut TrainConfig, assignments: &[Assignment]) -> Result<()> {
    for a in assignments {
        cfg.set(&a.key, &a.value).map_err(|e| Error::Parse {
            source_name: a.source.clone(),
            line: a.line,
            reason: e.to_string(),
        })?;
    }
    Ok(())
}

pub fn load_file(path: &Path) -> Result<Vec<Assignment>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_text(&text, &path.display().to_string())
}

/// Defaults, then `file`, then `sets`, then `flags`; the result is validated.
pub fn resolve(
    file: Option<&Path>,
    sets: &[String],
    flags: &[(&str, String)],
) -> Result<TrainConfig> {
    let mut cfg = TrainConfig::default();
    if let Some(path) = file {
        apply(&mut cfg, &load_file(path)?)?;
    }
    let sets = sets
        .iter()
        .enumerate()
        .map(|(k, s)| parse_assignment(s, "--set", k + 1))
        .collect::<Result<Vec<_>>>()?;
    apply(&mut cfg, &sets)?;
    let flags: Vec<Assignment> = flags
        .iter()
        .map(|(key, value)| Assignment {
            key: (*key).into(),
            value: value.clone(),
            source: format!("--{}", key.replace('_', "-")),
            line: 1,
        })
        .collect();
    apply(&mut cfg, &flags)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Every field, one `key=value` line each, in a fixed order.
pub fn render(cfg: &TrainConfig) -> String {
    let mut out = String::from("# resolved configuration\n");
    for (k, v) in cfg.to_pairs() {
        out.push_str(k);
        out.push('=');
        out.push_str(&v);
        out.push('\n');
    }
    out
}

pub fn write_resolved(dir: &Path, cfg: &TrainConfig) -> Result<()> {
    crate::write_atomic(&dir.join(crate::CONFIG_FILE), render(cfg).as_bytes())
}
