//! Named parameter collections tagged by model component.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::Tensor;
use crate::error::{Error, Result};

/// Which model component a parameter belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    /// Sequence encoder (θ).
    Sequence,
    /// Structure GNN (ω).
    Gnn,
    /// Pretext heads and the fusion projection (α).
    Heads,
    /// Mutual-information discriminator (β).
    Discriminator,
    /// Downstream classification head.
    Classifier,
}

impl Role {
    pub const ALL: [Role; 5] = [
        Role::Sequence,
        Role::Gnn,
        Role::Heads,
        Role::Discriminator,
        Role::Classifier,
    ];

    pub fn tag(self) -> u8 {
        match self {
            Role::Sequence => 0,
            Role::Gnn => 1,
            Role::Heads => 2,
            Role::Discriminator => 3,
            Role::Classifier => 4,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Role> {
        Role::ALL.into_iter().find(|r| r.tag() == tag)
    }
}

/// Anything that can resolve a parameter name to a tensor.
pub trait Lookup {
    fn param(&self, name: &str) -> Result<&Tensor>;
}

#[derive(Debug, Clone, Default)]
pub struct ParamSet {
    entries: BTreeMap<String, (Role, Tensor)>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores `value` as a trainable leaf, replacing any previous entry.
    pub fn insert(&mut self, name: impl Into<String>, role: Role, value: &Tensor) {
        self.entries.insert(name.into(), (role, value.param()));
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries.get(name).map(|(_, t)| t)
    }

    pub fn role(&self, name: &str) -> Option<Role> {
        self.entries.get(name).map(|(r, _)| *r)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn remove(&mut self, name: &str) -> Option<(Role, Tensor)> {
        self.entries.remove(name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of scalars across all parameters.
    pub fn scalar_count(&self) -> usize {
        self.entries.values().map(|(_, t)| t.len()).sum()
    }

    /// Entries in name order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, Role, &Tensor)> {
        self.entries.iter().map(|(n, (r, t))| (n.as_str(), *r, t))
    }

    /// Names and tensors of every parameter whose role is in `roles`, in name order.
    pub fn select(&self, roles: &[Role]) -> (Vec<String>, Vec<Tensor>) {
        self.iter()
            .filter(|(_, r, _)| roles.contains(r))
            .map(|(n, _, t)| (n.to_string(), t.clone()))
            .unzip()
    }

    /// Replaces a parameter's values with a fresh leaf of the same shape.
    pub fn set_values(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        let (role, old) = self
            .entries
            .get(name)
            .ok_or_else(|| Error::MissingParam(name.to_string()))?;
        let t = Tensor::new(old.rows(), old.cols(), values)?;
        let role = *role;
        self.entries.insert(name.to_string(), (role, t.param()));
        Ok(())
    }

    /// Bitwise equality of names, roles, shapes and values.
    pub fn bit_eq(&self, other: &ParamSet) -> bool {
        self.entries.len() == other.entries.len()
            && self
                .iter()
                .zip(other.iter())
                .all(|((na, ra, ta), (nb, rb, tb))| {
                    na == nb
                        && ra == rb
                        && ta.shape() == tb.shape()
                        && ta
                            .data()
                            .iter()
                            .zip(tb.data())
                            .all(|(a, b)| a.to_bits() == b.to_bits())
                })
    }

    /// Bitwise equality restricted to parameters with the given role.
    pub fn role_bit_eq(&self, other: &ParamSet, role: Role) -> bool {
        let pick = |p: &ParamSet| {
            let mut q = ParamSet::new();
            for (n, r, t) in p.iter().filter(|(_, r, _)| *r == role) {
                q.insert(n, r, t);
            }
            q
        };
        pick(self).bit_eq(&pick(other))
    }
}

impl Lookup for ParamSet {
    fn param(&self, name: &str) -> Result<&Tensor> {
        self.get(name)
            .ok_or_else(|| Error::MissingParam(name.to_string()))
    }
}

/// A parameter set with some entries substituted by other tensors, e.g. a
/// virtual inner-step update that must never be written back.
pub struct Overlay<'a> {
    base: &'a ParamSet,
    over: BTreeMap<String, Tensor>,
}

impl<'a> Overlay<'a> {
    pub fn new(base: &'a ParamSet) -> Self {
        Self {
            base,
            over: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: impl Into<String>, t: Tensor) -> Self {
        self.over.insert(name.into(), t);
        self
    }
}

impl Lookup for Overlay<'_> {
    fn param(&self, name: &str) -> Result<&Tensor> {
        match self.over.get(name) {
            Some(t) => Ok(t),
            None => self.base.param(name),
        }
    }
}
