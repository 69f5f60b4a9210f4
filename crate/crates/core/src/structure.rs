//! Backbone-only protein structures and their amino-acid sequences.

use alloc::string::String;
use alloc::vec::Vec;

use crate::geometry::Vec3;

/// One backbone-complete residue.
#[derive(Debug, Clone, PartialEq)]
pub struct Residue {
    /// Three-letter residue name as found in the structure file.
    pub code: String,
    pub n: Vec3,
    pub ca: Vec3,
    pub c: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProteinStructure {
    pub id: String,
    pub residues: Vec<Residue>,
}

impl ProteinStructure {
    pub fn new(id: impl Into<String>, residues: Vec<Residue>) -> Self {
        Self {
            id: id.into(),
            residues,
        }
    }

    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }

    pub fn ca_positions(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.residues.iter().map(|r| r.ca)
    }
}

/// The twenty standard residues in one-letter alphabetical order, plus `X`.
pub const ALPHABET: &[u8; 21] = b"ACDEFGHIKLMNPQRSTVWYX";

const THREE_TO_ONE: [(&str, u8); 20] = [
    ("ALA", b'A'),
    ("ARG", b'R'),
    ("ASN", b'N'),
    ("ASP", b'D'),
    ("CYS", b'C'),
    ("GLN", b'Q'),
    ("GLU", b'E'),
    ("GLY", b'G'),
    ("HIS", b'H'),
    ("ILE", b'I'),
    ("LEU", b'L'),
    ("LYS", b'K'),
    ("MET", b'M'),
    ("PHE", b'F'),
    ("PRO", b'P'),
    ("SER", b'S'),
    ("THR", b'T'),
    ("TRP", b'W'),
    ("TYR", b'Y'),
    ("VAL", b'V'),
];

/// Maps a three-letter residue name to its one-letter code; unknown names map to `X`.
pub fn one_letter(code: &str) -> char {
    let code = code.trim();
    THREE_TO_ONE
        .iter()
        .find(|(three, _)| three.eq_ignore_ascii_case(code))
        .map_or('X', |&(_, one)| one as char)
}

/// Position of a one-letter code in [`ALPHABET`]; anything unknown is `X` (20).
pub fn alphabet_index(one: char) -> usize {
    ALPHABET
        .iter()
        .position(|&b| b as char == one.to_ascii_uppercase())
        .unwrap_or(ALPHABET.len() - 1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProteinSequence {
    pub id: String,
    pub residues: String,
}

impl ProteinSequence {
    pub fn new(id: impl Into<String>, residues: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            residues: residues.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }

    /// Indices into [`ALPHABET`], one per residue.
    pub fn tokens(&self) -> Vec<usize> {
        self.residues.chars().map(alphabet_index).collect()
    }
}

pub fn to_sequence(s: &ProteinStructure) -> ProteinSequence {
    ProteinSequence {
        id: s.id.clone(),
        residues: s.residues.iter().map(|r| one_letter(&r.code)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn res(code: &str) -> Residue {
        Residue {
            code: code.into(),
            n: Vec3::default(),
            ca: Vec3::default(),
            c: Vec3::default(),
        }
    }

    #[test]
    fn maps_standard_codes() {
        let s = ProteinStructure::new("p", alloc::vec![res("ALA"), res("GLY")]);
        assert_eq!(to_sequence(&s).residues, "AG");
    }

    #[test]
    fn unknown_code_is_x() {
        let s = ProteinStructure::new("p", alloc::vec![res("ALA"), res("XYZ")]);
        let seq = to_sequence(&s);
        assert_eq!(seq.residues, "AX");
        assert_eq!(seq.len(), s.len());
    }

    #[test]
    fn every_standard_code_has_a_token() {
        for (three, one) in THREE_TO_ONE {
            let c = one_letter(three);
            assert_eq!(c, one as char);
            assert!(alphabet_index(c) < 20);
        }
        assert_eq!(alphabet_index('X'), 20);
        assert_eq!(alphabet_index('B'), 20);
    }
}
