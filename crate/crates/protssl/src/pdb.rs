//! Fixed-column PDB reader for backbone atoms.
//!
//! Columns (1-indexed): record name 1–6, atom name 13–16, altLoc 17,
//! residue name 18–20, chain 22, residue number 23–26, insertion code 27,
//! x/y/z 31–38/39–46/47–54.

use protssl_core::{ProteinStructure, Residue, Vec3};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub name: String,
    pub alt_loc: char,
    pub residue_code: String,
    pub chain: char,
    pub residue_index: i32,
    pub insertion: char,
    pub position: Vec3,
}

/// One chain of a parsed file.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedChain {
    pub structure: ProteinStructure,
    pub chain: char,
    /// Residues dropped because N, CA or C was missing.
    pub dropped: usize,
}

fn column(line: &str, range: std::ops::Range<usize>, line_no: usize) -> Result<&str> {
    line.get(range.clone())
        .ok_or_else(|| Error::MalformedRecord {
            line: line_no,
            reason: format!("columns {}-{} unreadable", range.start + 1, range.end),
        })
}

fn char_at(line: &str, idx: usize) -> char {
    line.as_bytes().get(idx).map_or(' ', |&b| b as char)
}

/// Parses one `ATOM` line. Other record types give `None`.
pub fn parse_atom(line: &str, line_no: usize) -> Result<Option<Atom>> {
    if !line.starts_with("ATOM  ") && line.trim_end() != "ATOM" {
        return Ok(None);
    }
    if line.len() < 54 {
        return Err(Error::MalformedRecord {
            line: line_no,
            reason: format!("{} columns, coordinates need 54", line.len()),
        });
    }
    let coord = |range: std::ops::Range<usize>, axis: &str| -> Result<f64> {
        let text = column(line, range, line_no)?.trim();
        text.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::MalformedRecord {
                line: line_no,
                reason: format!("{axis} coordinate {text:?} is not a number"),
            })
    };
    let position = Vec3::new(
        coord(30..38, "x")?,
        coord(38..46, "y")?,
        coord(46..54, "z")?,
    );
    let seq_text = column(line, 22..26, line_no)?.trim();
    let residue_index = seq_text.parse().map_err(|_| Error::MalformedRecord {
        line: line_no,
        reason: format!("residue number {seq_text:?} is not an integer"),
    })?;
    Ok(Some(Atom {
        name: column(line, 12..16, line_no)?.trim().to_string(),
        alt_loc: char_at(line, 16),
        residue_code: column(line, 17..20, line_no)?.trim().to_string(),
        chain: char_at(line, 21),
        residue_index,
        insertion: char_at(line, 26),
        position,
    }))
}

#[derive(Default)]
struct Pending {
    key: (i32, char),
    code: String,
    n: Option<Vec3>,
    ca: Option<Vec3>,
    c: Option<Vec3>,
}

impl Pending {
    fn finish(self) -> Option<Residue> {
        Some(Residue {
            code: self.code,
            n: self.n?,
            ca: self.ca?,
            c: self.c?,
        })
    }
}

/// Backbone of one chain from the first model of a PDB text.
///
/// With `chain` absent the first chain with an `ATOM` record is used.
/// Only `ATOM` records with altLoc blank or `A` count, the first copy of a
/// duplicated atom wins, and residues missing N, CA or C are dropped.
pub fn parse_pdb(text: &str, id: &str, chain: Option<char>) -> Result<ParsedChain> {
    let mut selected = chain;
    let mut residues = Vec::new();
    let mut dropped = 0;
    let mut current: Option<Pending> = None;
    let mut seen_model = false;

    let mut flush = |p: Option<Pending>, residues: &mut Vec<Residue>| {
        if let Some(p) = p {
            match p.finish() {
                Some(r) => residues.push(r),
                None => dropped += 1,
            }
        }
    };

    for (k, line) in text.lines().enumerate() {
        if line.starts_with("ENDMDL") {
            break;
        }
        if line.starts_with("MODEL") {
            if seen_model {
                break;
            }
            seen_model = true;
            continue;
        }
        let Some(atom) = parse_atom(line, k + 1)? else {
            continue;
        };
        if !matches!(atom.alt_loc, ' ' | 'A') {
            continue;
        }
        let want = *selected.get_or_insert(atom.chain);
        if atom.chain != want {
            continue;
        }
        let key = (atom.residue_index, atom.insertion);
        if current.as_ref().map(|p| p.key) != Some(key) {
            flush(current.take(), &mut residues);
            current = Some(Pending {
                key,
                code: atom.residue_code.clone(),
                ..Pending::default()
            });
        }
        let p = current.as_mut().expect("set above");
        let slot = match atom.name.as_str() {
            "N" => &mut p.n,
            "CA" => &mut p.ca,
            "C" => &mut p.c,
            _ => continue,
        };
        if slot.is_none() {
            *slot = Some(atom.position);
        }
    }
    flush(current.take(), &mut residues);

    let Some(selected) = selected else {
        return Err(Error::EmptyChain { chain: ' ' });
    };
    if chain.is_some() && residues.is_empty() && dropped == 0 {
        return Err(Error::ChainNotFound(selected));
    }
    let chain = selected;
    if residues.is_empty() {
        return Err(Error::EmptyChain { chain });
    }
    Ok(ParsedChain {
        structure: ProteinStructure::new(id, residues),
        chain,
        dropped,
    })
}
