//! Residue-graph cache (`SGR1`).
//!
//! Little-endian layout:
//!
//! | field | encoding |
//! |---|---|
//! | magic | `SGR1` |
//! | id | u32 byte length + UTF-8 |
//! | L, F, seq_dim, rbf_count | u32 each |
//! | sequence | L ASCII one-letter codes |
//! | node features | L·F f32, row-major |
//! | edge count | u32 |
//! | edges | per edge: u32 i, u32 j (i < j), f64 weight |
//! | distances | L·L f64, row-major |
//! | dihedrals | per residue: u8 flags (bit 0 φ, bit 1 ψ defined), f64 φ, f64 ψ |
//!
//! Undefined angles are written as 0.

use std::fs;
use std::path::{Path, PathBuf};

use protssl_core::graph::{angle_dim, Edge};
use protssl_core::{DihedralPair, DistanceMatrix, Matrix, ProteinGraph, ProteinSequence};

use crate::binio::{Reader, Writer};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SGR1";
pub const EXTENSION: &str = "sgr";

pub fn encode(g: &ProteinGraph) -> Vec<u8> {
    let (l, f) = (g.len(), g.feature_dim());
    let mut w = Writer::new(MAGIC);
    w.str(&g.id);
    w.u32(l);
    w.u32(f);
    w.u32(g.seq_dim);
    w.u32(g.rbf_count);
    w.bytes(g.sequence.residues.as_bytes());
    for &v in g.features.data() {
        w.f32(v);
    }
    w.u32(g.edges.len());
    for e in &g.edges {
        w.u32(e.i);
        w.u32(e.j);
        w.f64(e.weight);
    }
    for &v in g.distances.as_matrix().data() {
        w.f64(v);
    }
    for d in &g.dihedrals {
        w.u8(u8::from(d.phi.is_some()) | (u8::from(d.psi.is_some()) << 1));
        w.f64(d.phi.unwrap_or(0.0));
        w.f64(d.psi.unwrap_or(0.0));
    }
    w.finish()
}

pub fn decode(data: &[u8]) -> Result<ProteinGraph> {
    let mut r = Reader::new("SGR1", MAGIC, data)?;
    let id = r.str()?;
    let (l, f, seq_dim, rbf_count) = (r.u32()?, r.u32()?, r.u32()?, r.u32()?);
    if f < seq_dim || f - seq_dim != angle_dim(rbf_count) {
        return Err(r.err(format!(
            "feature width {f} does not match seq_dim {seq_dim} and rbf_count {rbf_count}"
        )));
    }
    let seq = r.take(l)?;
    if !seq.iter().all(u8::is_ascii_alphabetic) {
        return Err(r.err("sequence is not one-letter codes"));
    }
    let residues = String::from_utf8(seq.to_vec()).expect("ASCII");
    let features = Matrix::from_vec(l, f, r.f32s(l.saturating_mul(f))?);

    let edge_count = r.u32()?;
    r.expect_items(edge_count, 16)?;
    let mut edges = Vec::with_capacity(edge_count);
    for _ in 0..edge_count {
        let (i, j, weight) = (r.u32()?, r.u32()?, r.f64()?);
        if !(i < j && j < l) {
            return Err(r.err(format!("edge ({i}, {j}) out of range for {l} residues")));
        }
        edges.push(Edge { i, j, weight });
    }
    let distances =
        DistanceMatrix::from_matrix(Matrix::from_vec(l, l, r.f64s(l.saturating_mul(l))?));
    r.expect_items(l, 17)?;
    let mut dihedrals = Vec::with_capacity(l);
    for _ in 0..l {
        let (flags, phi, psi) = (r.u8()?, r.f64()?, r.f64()?);
        dihedrals.push(DihedralPair {
            phi: (flags & 1 != 0).then_some(phi),
            psi: (flags & 2 != 0).then_some(psi),
        });
    }
    r.finish()?;
    Ok(ProteinGraph {
        sequence: ProteinSequence::new(id.clone(), residues),
        id,
        seq_dim,
        rbf_count,
        features,
        edges,
        distances,
        dihedrals,
    })
}

pub fn cache_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.{EXTENSION}"))
}

pub fn write(path: &Path, g: &ProteinGraph) -> Result<()> {
    crate::write_atomic(path, &encode(g))
}

pub fn read(path: &Path) -> Result<ProteinGraph> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|e| match e {
        Error::Format { format, reason } => Error::Format {
            format,
            reason: format!("{}: {reason}", path.display()),
        },
        other => other,
    })
}

/// Every `*.sgr` file in `dir`, sorted by file name.
pub fn read_dir(dir: &Path) -> Result<Vec<ProteinGraph>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|x| x == EXTENSION) {
            paths.push(path);
        }
    }
    paths.sort();
    paths.iter().map(|p| read(p)).collect()
}
