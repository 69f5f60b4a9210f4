//! Residue graphs: thresholded Cα contacts weighted by inverse squared
//! distance, node features, retained pretext targets, and angle masking.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{
    backbone_dihedrals, normalize_angle, pairwise_distances, rbf_expand, DihedralPair,
    DistanceMatrix, RbfConfig,
};
use crate::matrix::Matrix;
use crate::seed;
use crate::structure::{to_sequence, ProteinSequence, ProteinStructure};

/// Undirected edge stored once with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// Node feature layout per row:
/// `[seq embedding (seq_dim) | rbf(φ̂) | rbf(ψ̂) | φ present | ψ present]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProteinGraph {
    pub id: String,
    pub sequence: ProteinSequence,
    pub seq_dim: usize,
    pub rbf_count: usize,
    pub features: Matrix,
    pub edges: Vec<Edge>,
    pub distances: DistanceMatrix,
    pub dihedrals: Vec<DihedralPair>,
}

/// Width of the angle block for `rbf_count` centers.
pub const fn angle_dim(rbf_count: usize) -> usize {
    2 * rbf_count + 2
}

impl ProteinGraph {
    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.rows() == 0
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn seq_block(&self) -> Matrix {
        self.features.columns(0, self.seq_dim)
    }

    pub fn angle_block(&self) -> Matrix {
        self.features.columns(self.seq_dim, self.features.cols())
    }

    /// Dense symmetric adjacency with edge weights, zero diagonal.
    pub fn adjacency(&self) -> Matrix {
        let n = self.len();
        let mut a = Matrix::zeros(n, n);
        for e in &self.edges {
            a.set(e.i, e.j, e.weight);
            a.set(e.j, e.i, e.weight);
        }
        a
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.edges.iter().filter_map(move |e| {
            if e.i == i {
                Some((e.j, e.weight))
            } else if e.j == i {
                Some((e.i, e.weight))
            } else {
                None
            }
        })
    }

    pub fn as_input(&self) -> NodeInput<'_> {
        NodeInput {
            graph: self,
            features: &self.features,
            masked: &[],
        }
    }
}

/// Angle block `[rbf(φ̂) | rbf(ψ̂) | φ present | ψ present]`, one row per residue.
pub fn angle_features(dihedrals: &[DihedralPair], rbf: &RbfConfig) -> Matrix {
    let r = rbf.count();
    let mut m = Matrix::zeros(dihedrals.len(), angle_dim(r));
    for (i, pair) in dihedrals.iter().enumerate() {
        let row = m.row_mut(i);
        row[..r].copy_from_slice(&rbf_expand(normalize_angle(pair.phi), rbf));
        row[r..2 * r].copy_from_slice(&rbf_expand(normalize_angle(pair.psi), rbf));
        row[2 * r] = if pair.phi.is_some() { 1.0 } else { 0.0 };
        row[2 * r + 1] = if pair.psi.is_some() { 1.0 } else { 0.0 };
    }
    m
}

/// Builds the residue graph. Edge (i, j) exists iff `0 < d_ij < threshold`.
pub fn build_graph(
    s: &ProteinStructure,
    seq_emb: &Matrix,
    threshold: f64,
    rbf: &RbfConfig,
) -> Result<ProteinGraph> {
    let n = s.len();
    if seq_emb.rows() != n {
        return Err(Error::DimensionMismatch {
            what: "sequence embedding rows".into(),
            expected: n,
            found: seq_emb.rows(),
        });
    }
    let distances = pairwise_distances(s);
    let dihedrals = backbone_dihedrals(s)?;

    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = distances.get(i, j);
            if d > 0.0 && d < threshold {
                edges.push(Edge {
                    i,
                    j,
                    weight: 1.0 / (d * d),
                });
            }
        }
    }

    let angles = angle_features(&dihedrals, rbf);
    let e = seq_emb.cols();
    let f = e + angles.cols();
    let mut features = Matrix::zeros(n, f);
    for i in 0..n {
        let row = features.row_mut(i);
        row[..e].copy_from_slice(seq_emb.row(i));
        row[e..].copy_from_slice(angles.row(i));
    }

    Ok(ProteinGraph {
        id: s.id.clone(),
        sequence: to_sequence(s),
        seq_dim: e,
        rbf_count: rbf.count(),
        features,
        edges,
        distances,
        dihedrals,
    })
}

/// Node features as seen by the encoder, with the set of angle-masked rows.
#[derive(Debug, Clone, Copy)]
pub struct NodeInput<'a> {
    pub graph: &'a ProteinGraph,
    pub features: &'a Matrix,
    /// Sorted indices whose angle block was zeroed.
    pub masked: &'a [usize],
}

impl NodeInput<'_> {
    /// 1.0 on masked rows, 0.0 elsewhere.
    pub fn mask_indicator(&self) -> Vec<f64> {
        let mut flags = alloc::vec![0.0; self.graph.len()];
        for &i in self.masked {
            flags[i] = 1.0;
        }
        flags
    }
}

#[derive(Debug, Clone)]
pub struct MaskedGraph<'a> {
    pub base: &'a ProteinGraph,
    /// Sorted, distinct node indices.
    pub masked: Vec<usize>,
    pub features: Matrix,
}

impl MaskedGraph<'_> {
    pub fn as_input(&self) -> NodeInput<'_> {
        NodeInput {
            graph: self.base,
            features: &self.features,
            masked: &self.masked,
        }
    }
}

/// Number of residues to mask: `round_half_up(ratio · L)`, at least one.
pub fn mask_count(len: usize, ratio: f64) -> usize {
    let k = libm::floor(ratio * len as f64 + 0.5) as usize;
    k.max(1)
}

/// Zeroes the angle block of a random subset of residues.
///
/// Only residues with at least one defined dihedral are candidates.
pub fn mask_graph(g: &ProteinGraph, mask_ratio: f64, rng_seed: u64) -> Result<MaskedGraph<'_>> {
    if !(mask_ratio > 0.0 && mask_ratio < 1.0) {
        return Err(Error::InvalidConfig("mask ratio must lie in (0, 1)".into()));
    }
    let candidates: Vec<usize> = g
        .dihedrals
        .iter()
        .enumerate()
        .filter(|(_, d)| d.has_any())
        .map(|(i, _)| i)
        .collect();
    if candidates.is_empty() {
        return Err(Error::NoMaskable);
    }
    let count = mask_count(g.len(), mask_ratio).min(candidates.len());
    let mut rng = seed::rng(rng_seed);
    let mut masked: Vec<usize> = rand::seq::index::sample(&mut rng, candidates.len(), count)
        .into_iter()
        .map(|k| candidates[k])
        .collect();
    masked.sort_unstable();

    let mut features = g.features.clone();
    for &i in &masked {
        for v in &mut features.row_mut(i)[g.seq_dim..] {
            *v = 0.0;
        }
    }
    Ok(MaskedGraph {
        base: g,
        masked,
        features,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use crate::structure::Residue;

    fn line_structure(xs: &[f64]) -> ProteinStructure {
        // slight zig-zag keeps every dihedral well defined
        let residues = xs
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                let ca = Vec3::new(x, 0.0, 0.0);
                let s = if k % 2 == 0 { 1.0 } else { -1.0 };
                Residue {
                    code: "ALA".into(),
                    n: ca + Vec3::new(-0.5, 0.8 * s, 0.3),
                    ca,
                    c: ca + Vec3::new(0.5, 0.7 * s, -0.4),
                }
            })
            .collect();
        ProteinStructure::new("line", residues)
    }

    #[test]
    fn threshold_edges_and_weights() {
        let s = line_structure(&[0.0, 5.0, 10.0]);
        let rbf = RbfConfig::uniform(16, 10.0).unwrap();
        let g = build_graph(&s, &Matrix::zeros(3, 4), 7.0, &rbf).unwrap();
        assert_eq!(
            g.edges,
            alloc::vec![
                Edge {
                    i: 0,
                    j: 1,
                    weight: 0.04
                },
                Edge {
                    i: 1,
                    j: 2,
                    weight: 0.04
                }
            ]
        );
    }

    #[test]
    fn unit_distance_gives_unit_weight() {
        let s = line_structure(&[0.0, 1.0]);
        let rbf = RbfConfig::uniform(4, 10.0).unwrap();
        let g = build_graph(&s, &Matrix::zeros(2, 1), 7.0, &rbf).unwrap();
        assert_eq!(g.edges[0].weight, 1.0);
    }

    #[test]
    fn threshold_is_strict() {
        let s = line_structure(&[0.0, 7.0]);
        let rbf = RbfConfig::uniform(4, 10.0).unwrap();
        let g = build_graph(&s, &Matrix::zeros(2, 1), 7.0, &rbf).unwrap();
        assert!(g.edges.is_empty());
    }

    #[test]
    fn feature_width() {
        let s = line_structure(&[0.0, 3.8]);
        let rbf = RbfConfig::uniform(16, 10.0).unwrap();
        let g = build_graph(&s, &Matrix::zeros(2, 4), 7.0, &rbf).unwrap();
        assert_eq!(g.feature_dim(), 38);
    }

    #[test]
    fn embedding_rows_must_match() {
        let s = line_structure(&[0.0, 3.8]);
        let rbf = RbfConfig::uniform(4, 10.0).unwrap();
        let err = build_graph(&s, &Matrix::zeros(3, 4), 7.0, &rbf).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                expected: 2,
                found: 3,
                ..
            }
        ));
    }

    #[test]
    fn mask_counts() {
        assert_eq!(mask_count(20, 0.15), 3);
        assert_eq!(mask_count(7, 0.15), 1);
        assert_eq!(mask_count(2, 0.15), 1);
        assert_eq!(mask_count(10, 0.15), 2);
    }

    #[test]
    fn masking_is_seeded_and_keeps_sequence_block() {
        let xs: alloc::vec::Vec<f64> = (0..20).map(|k| 3.8 * k as f64).collect();
        let s = line_structure(&xs);
        let rbf = RbfConfig::uniform(8, 10.0).unwrap();
        let mut emb = Matrix::zeros(20, 3);
        for i in 0..20 {
            emb.row_mut(i).copy_from_slice(&[i as f64, 0.5, -1.0]);
        }
        let g = build_graph(&s, &emb, 7.0, &rbf).unwrap();
        let a = mask_graph(&g, 0.15, 42).unwrap();
        let b = mask_graph(&g, 0.15, 42).unwrap();
        assert_eq!(a.masked, b.masked);
        assert_eq!(a.masked.len(), 3);
        for i in 0..20 {
            assert_eq!(&a.features.row(i)[..3], &g.features.row(i)[..3]);
            let zeroed = a.features.row(i)[3..].iter().all(|&v| v == 0.0);
            assert_eq!(zeroed, a.masked.contains(&i));
        }
        assert_eq!(a.as_input().mask_indicator().iter().sum::<f64>(), 3.0);
    }

    #[test]
    fn ratio_must_be_open_unit_interval() {
        let s = line_structure(&[0.0, 3.8, 7.6]);
        let rbf = RbfConfig::uniform(4, 10.0).unwrap();
        let g = build_graph(&s, &Matrix::zeros(3, 1), 7.0, &rbf).unwrap();
        assert!(mask_graph(&g, 0.0, 1).is_err());
        assert!(mask_graph(&g, 1.0, 1).is_err());
    }

    #[test]
    fn no_maskable_residue() {
        let s = line_structure(&[0.0, 3.8]);
        let rbf = RbfConfig::uniform(4, 10.0).unwrap();
        let mut g = build_graph(&s, &Matrix::zeros(2, 1), 7.0, &rbf).unwrap();
        g.dihedrals = alloc::vec![DihedralPair::default(); 2];
        assert_eq!(mask_graph(&g, 0.15, 0).unwrap_err(), Error::NoMaskable);
    }
}
