//! Frozen per-residue embeddings (`SEM1`).
//!
//! Little-endian layout: magic `SEM1`, u32 protein count, then per protein
//! in id order: u32 byte length + UTF-8 id, u32 L, u32 E, L·E f32
//! row-major.

use std::fs;
use std::path::Path;

use protssl_core::models::EmbeddingTable;
use protssl_core::Matrix;

use crate::binio::{Reader, Writer};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SEM1";

pub fn encode(table: &EmbeddingTable) -> Vec<u8> {
    let mut entries: Vec<(&str, &Matrix)> = table.iter().collect();
    entries.sort_by(|a, b| a.0.cmp(b.0));
    let mut w = Writer::new(MAGIC);
    w.u32(entries.len());
    for (id, m) in entries {
        w.str(id);
        w.u32(m.rows());
        w.u32(m.cols());
        for &v in m.data() {
            w.f32(v);
        }
    }
    w.finish()
}

pub fn decode(data: &[u8]) -> Result<EmbeddingTable> {
    let mut r = Reader::new("SEM1", MAGIC, data)?;
    let count = r.u32()?;
    r.expect_items(count, 12)?;
    let mut table = EmbeddingTable::new();
    let mut width = None;
    for _ in 0..count {
        let id = r.str()?;
        let (l, e) = (r.u32()?, r.u32()?);
        if *width.get_or_insert(e) != e {
            return Err(r.err(format!(
                "{id} has width {e}, earlier proteins {}",
                width.unwrap_or(0)
            )));
        }
        if table.lookup(&id).is_ok() {
            return Err(r.err(format!("duplicate id {id}")));
        }
        let values = r.f32s(l.saturating_mul(e))?;
        table.insert(id, Matrix::from_vec(l, e, values));
    }
    r.finish()?;
    Ok(table)
}

pub fn save(path: &Path, table: &EmbeddingTable) -> Result<()> {
    crate::write_atomic(path, &encode(table))
}

pub fn load(path: &Path) -> Result<EmbeddingTable> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> EmbeddingTable {
        let mut t = EmbeddingTable::new();
        t.insert(
            "b",
            Matrix::from_vec(2, 3, vec![0.5, -1.0, 2.0, 0.25, 0.0, 8.0]),
        );
        t.insert("a", Matrix::from_vec(1, 3, vec![1.0, 2.0, 3.0]));
        t
    }

    #[test]
    fn round_trip_and_id_order() {
        let bytes = encode(&table());
        let back = decode(&bytes).unwrap();
        assert_eq!(back.lookup("b").unwrap(), table().lookup("b").unwrap());
        assert_eq!(back.len(), 2);
        assert_eq!(&bytes[..4], b"SEM1");
        assert_eq!(&bytes[8..12], &1u32.to_le_bytes());
        assert_eq!(bytes[12], b'a');
        assert_eq!(encode(&back), bytes);
    }

    #[test]
    fn values_are_stored_as_f32() {
        let mut t = EmbeddingTable::new();
        t.insert("x", Matrix::from_vec(1, 1, vec![0.1]));
        let back = decode(&encode(&t)).unwrap();
        assert_eq!(back.lookup("x").unwrap().get(0, 0), f64::from(0.1f32));
    }

    #[test]
    fn mixed_widths_and_truncation_are_rejected() {
        let mut t = table();
        t.insert("c", Matrix::from_vec(1, 2, vec![1.0, 2.0]));
        assert!(matches!(decode(&encode(&t)), Err(Error::Format { .. })));
        let bytes = encode(&table());
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.sem");
        save(&path, &table()).unwrap();
        assert_eq!(load(&path).unwrap().ids(), table().ids());
    }
}
