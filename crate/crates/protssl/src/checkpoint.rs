//! Parameter checkpoint (`SPM1`).
//!
//! Little-endian layout: magic `SPM1`, u32 parameter count, then a name
//! table with one entry per parameter in name order (u32 byte length +
//! UTF-8 name, u8 role tag, u32 rows, u32 cols), then the payload: every
//! parameter's values as f64, row-major, in table order.
//!
//! Role tags: 0 sequence encoder, 1 GNN, 2 heads, 3 discriminator,
//! 4 classifier.

use std::fs;
use std::path::Path;

use protssl_core::{ParamSet, Role, Tensor};

use crate::binio::{Reader, Writer};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SPM1";

pub fn encode(params: &ParamSet) -> Vec<u8> {
    let mut w = Writer::new(MAGIC);
    w.u32(params.len());
    for (name, role, t) in params.iter() {
        w.str(name);
        w.u8(role.tag());
        w.u32(t.rows());
        w.u32(t.cols());
    }
    for (_, _, t) in params.iter() {
        for &v in t.data() {
            w.f64(v);
        }
    }
    w.finish()
}

pub fn decode(data: &[u8]) -> Result<ParamSet> {
    let mut r = Reader::new("SPM1", MAGIC, data)?;
    let count = r.u32()?;
    r.expect_items(count, 13)?;
    let mut table = Vec::with_capacity(count);
    for _ in 0..count {
        let name = r.str()?;
        let tag = r.u8()?;
        let role = Role::from_tag(tag)
            .ok_or_else(|| r.err(format!("unknown role tag {tag} for {name}")))?;
        table.push((name, role, r.u32()?, r.u32()?));
    }
    let mut params = ParamSet::new();
    for (name, role, rows, cols) in table {
        if params.contains(&name) {
            return Err(r.err(format!("duplicate parameter {name}")));
        }
        let values = r.f64s(rows.saturating_mul(cols))?;
        let t = Tensor::new(rows, cols, values).map_err(Error::Core)?;
        params.insert(name, role, &t);
    }
    r.finish()?;
    Ok(params)
}

pub fn save(path: &Path, params: &ParamSet) -> Result<()> {
    crate::write_atomic(path, &encode(params))
}

pub fn load(path: &Path) -> Result<ParamSet> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

/// Names whose role, shape or bytes differ between two parameter sets,
/// including names present in only one of them.
pub fn changed(a: &ParamSet, b: &ParamSet) -> Vec<String> {
    let mut names: Vec<&str> = a
        .iter()
        .map(|(n, _, _)| n)
        .chain(b.iter().map(|(n, _, _)| n))
        .collect();
    names.sort_unstable();
    names.dedup();
    names
        .into_iter()
        .filter(|n| {
            let same = match (a.get(n), b.get(n)) {
                (Some(x), Some(y)) => {
                    a.role(n) == b.role(n)
                        && x.shape() == y.shape()
                        && x.data()
                            .iter()
                            .zip(y.data())
                            .all(|(p, q)| p.to_bits() == q.to_bits())
                }
                _ => false,
            };
            !same
        })
        .map(String::from)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use protssl_core::gradcheck::tiny_config;
    use protssl_core::models::{Model, ModelConfig};
    use protssl_core::SeqMode;

    fn params(seed: u64) -> ParamSet {
        Model::new(ModelConfig::from_train(&tiny_config(SeqMode::Toy, false)))
            .unwrap()
            .init_params(seed)
    }

    #[test]
    fn round_trip_is_bitwise() {
        let mut p = params(1);
        p.set_values("gnn.in.b", vec![-0.0, f64::MIN_POSITIVE, 1e300, -3.5])
            .unwrap();
        let bytes = encode(&p);
        let back = decode(&bytes).unwrap();
        assert!(back.bit_eq(&p));
        assert_eq!(encode(&back), bytes);
        assert!(changed(&p, &back).is_empty());
    }

    #[test]
    fn layout_starts_with_table() {
        let mut p = ParamSet::new();
        p.insert("a", Role::Gnn, &Tensor::new(1, 2, vec![1.0, 2.0]).unwrap());
        let bytes = encode(&p);
        let mut expected = b"SPM1".to_vec();
        expected.extend_from_slice(&1u32.to_le_bytes());
        expected.extend_from_slice(&1u32.to_le_bytes());
        expected.push(b'a');
        expected.push(1);
        expected.extend_from_slice(&1u32.to_le_bytes());
        expected.extend_from_slice(&2u32.to_le_bytes());
        expected.extend_from_slice(&1.0f64.to_le_bytes());
        expected.extend_from_slice(&2.0f64.to_le_bytes());
        assert_eq!(bytes, expected);
    }

    #[test]
    fn corrupt_input_is_rejected() {
        let bytes = encode(&params(2));
        assert!(decode(&bytes[..bytes.len() - 3]).is_err());
        let mut bad_role = bytes.clone();
        let name_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        bad_role[12 + name_len] = 9;
        assert!(matches!(decode(&bad_role), Err(Error::Format { .. })));
    }

    #[test]
    fn changed_lists_differences() {
        let a = params(3);
        let mut b = a.clone();
        b.set_values("angle.fc2.b", vec![1.0, 0.0]).unwrap();
        b.insert("cls.b", Role::Classifier, &Tensor::zeros(1, 2));
        assert_eq!(changed(&a, &b), ["angle.fc2.b", "cls.b"]);
    }

    #[test]
    fn save_is_atomic_and_loadable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.spm");
        save(&path, &params(4)).unwrap();
        save(&path, &params(5)).unwrap();
        assert!(load(&path).unwrap().bit_eq(&params(5)));
        let leftovers: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(leftovers.len(), 1);
    }
}
