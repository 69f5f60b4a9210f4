//! Backbone geometry: Cα distances, φ/ψ dihedrals, angle normalization and
//! radial-basis expansion of normalized angles.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::structure::ProteinStructure;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        libm::sqrt(self.dot(self))
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Symmetric L×L matrix of Cα–Cα distances in Ångströms.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix(Matrix);

impl DistanceMatrix {
    /// Wraps a square matrix of distances. Panics if it is not square.
    pub fn from_matrix(m: Matrix) -> Self {
        assert_eq!(m.rows(), m.cols(), "distance matrix must be square");
        Self(m)
    }

    pub fn len(&self) -> usize {
        self.0.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.rows() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }
}

pub fn pairwise_distances(s: &ProteinStructure) -> DistanceMatrix {
    let ca: Vec<Vec3> = s.ca_positions().collect();
    let n = ca.len();
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = ca[i].distance(ca[j]);
            m.set(i, j, d);
            m.set(j, i, d);
        }
    }
    DistanceMatrix(m)
}

const DEGENERATE_NORM: f64 = 1e-10;

/// Signed torsion angle about the `p1 → p2` axis, in (−π, π].
///
/// Positive when, looking down `p1 → p2`, `p3` is rotated clockwise from `p0`.
pub fn dihedral(p0: Vec3, p1: Vec3, p2: Vec3, p3: Vec3) -> Result<f64> {
    let b1 = p1 - p0;
    let b2 = p2 - p1;
    let b3 = p3 - p2;
    let n1 = b1.cross(b2);
    let n2 = b2.cross(b3);
    if n1.norm() < DEGENERATE_NORM || n2.norm() < DEGENERATE_NORM {
        return Err(Error::DegenerateGeometry { residue: None });
    }
    let y = b2.norm() * b1.dot(n2);
    let x = n1.dot(n2);
    let angle = libm::atan2(y, x);
    Ok(if angle <= -PI { PI } else { angle })
}

/// Backbone φ/ψ for one residue; `None` where the angle is undefined at a chain end.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DihedralPair {
    pub phi: Option<f64>,
    pub psi: Option<f64>,
}

impl DihedralPair {
    pub fn has_any(&self) -> bool {
        self.phi.is_some() || self.psi.is_some()
    }
}

/// φ_i = (C_{i−1}, N_i, Cα_i, C_i); ψ_i = (N_i, Cα_i, C_i, N_{i+1}).
pub fn backbone_dihedrals(s: &ProteinStructure) -> Result<Vec<DihedralPair>> {
    let res = &s.residues;
    let n = res.len();
    let tag = |i: usize| move |_| Error::DegenerateGeometry { residue: Some(i) };
    (0..n)
        .map(|i| {
            let r = &res[i];
            let phi = if i > 0 {
                Some(dihedral(res[i - 1].c, r.n, r.ca, r.c).map_err(tag(i))?)
            } else {
                None
            };
            let psi = if i + 1 < n {
                Some(dihedral(r.n, r.ca, r.c, res[i + 1].n).map_err(tag(i))?)
            } else {
                None
            };
            Ok(DihedralPair { phi, psi })
        })
        .collect()
}

/// Scales an angle in (−π, π] to [−1, 1]; an undefined angle becomes 0.
pub fn normalize_angle(a: Option<f64>) -> f64 {
    a.map_or(0.0, |a| a / PI)
}

/// Gaussian radial-basis expansion `exp(−γ (x − u_j)²)` over ordered centers.
#[derive(Debug, Clone, PartialEq)]
pub struct RbfConfig {
    gamma: f64,
    centers: Vec<f64>,
}

impl RbfConfig {
    pub fn new(gamma: f64, centers: Vec<f64>) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidConfig("rbf gamma must be positive".into()));
        }
        if centers.len() < 2 {
            return Err(Error::InvalidConfig(
                "rbf needs at least two centers".into(),
            ));
        }
        if centers.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidConfig(
                "rbf centers must be strictly increasing".into(),
            ));
        }
        Ok(Self { gamma, centers })
    }

    /// `count` centers evenly spaced on [−1, 1].
    pub fn uniform(count: usize, gamma: f64) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidConfig(
                "rbf needs at least two centers".into(),
            ));
        }
        let step = 2.0 / (count - 1) as f64;
        let centers = (0..count).map(|j| -1.0 + step * j as f64).collect();
        Self::new(gamma, centers)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn count(&self) -> usize {
        self.centers.len()
    }
}

pub fn rbf_expand(x: f64, cfg: &RbfConfig) -> Vec<f64> {
    cfg.centers
        .iter()
        .map(|&u| libm::exp(-cfg.gamma * (x - u) * (x - u)))
        .collect()
}
