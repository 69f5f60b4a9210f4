//! Labeled dataset index: one `id<TAB>label` line per protein.
//!
//! Blank lines and `#` comments are skipped. Ids must be unique and name a
//! graph cache `<id>.sgr` in the cache directory.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use protssl_core::ProteinGraph;

use crate::cache;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub id: String,
    pub label: usize,
}

pub fn parse(text: &str, source: &str) -> Result<Vec<Entry>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |reason: String| Error::Parse {
            source_name: source.into(),
            line: k + 1,
            reason,
        };
        let Some((id, label)) = line.split_once('\t') else {
            return Err(err(format!("expected id<TAB>label, found {line:?}")));
        };
        let label = label
            .trim()
            .parse()
            .map_err(|_| err(format!("label {label:?} is not a non-negative integer")))?;
        if id.is_empty() || !seen.insert(id.to_string()) {
            return Err(err(format!("empty or duplicate id {id:?}")));
        }
        out.push(Entry {
            id: id.into(),
            label,
        });
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<Vec<Entry>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text, &path.display().to_string())
}

/// Class count implied by the labels (largest label + 1).
pub fn class_count(entries: &[Entry]) -> usize {
    entries.iter().map(|e| e.label + 1).max().unwrap_or(0)
}

/// Graph caches for every entry, in manifest order.
pub fn load_graphs(entries: &[Entry], cache_dir: &Path) -> Result<Vec<ProteinGraph>> {
    entries
        .iter()
        .map(|e| cache::read(&cache::cache_path(cache_dir, &e.id)))
        .collect()
}
