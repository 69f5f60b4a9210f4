//! PDB ingestion, binary caches, configuration files and the command-line
//! driver around `protssl-core`.

use std::fs;
use std::io::Write;
use std::path::Path;

pub mod binio;
pub mod cache;
pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod embeddings;
pub mod error;
pub mod manifest;
pub mod metrics;
pub mod pdb;

pub use error::{Error, Result};
pub use protssl_core as core;

/// Name of the resolved configuration written beside every run's outputs.
pub const CONFIG_FILE: &str = "config.txt";

/// Writes `bytes` to a temporary sibling of `path`, syncs it and renames it
/// over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}
