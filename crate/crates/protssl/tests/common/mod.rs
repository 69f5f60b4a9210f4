#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use protssl::core::gradcheck::ideal_chain;
use protssl::core::{seed, ProteinStructure, Vec3};
use rand::Rng;

pub const CODES: [&str; 20] = [
    "ALA", "ARG", "ASN", "ASP", "CYS", "GLN", "GLU", "GLY", "HIS", "ILE", "LEU", "LYS", "MET",
    "PHE", "PRO", "SER", "THR", "TRP", "TYR", "VAL",
];

/// Backbone as fixed-column PDB `ATOM` records on chain A.
pub fn pdb_text(s: &ProteinStructure) -> String {
    let mut out = String::from("HEADER    SYNTHETIC BACKBONE\n");
    let mut serial = 1;
    for (k, r) in s.residues.iter().enumerate() {
        for (name, p, element) in [(" N", r.n, "N"), (" CA", r.ca, "C"), (" C", r.c, "C")] {
            out.push_str(&format!(
                "ATOM  {serial:>5} {name:<4} {:>3} A{:>4}    {:>8.3}{:>8.3}{:>8.3}  1.00  0.00          {element:>2}\n",
                r.code,
                k + 1,
                p.x,
                p.y,
                p.z
            ));
            serial += 1;
        }
    }
    out.push_str("END\n");
    out
}

/// Ideal backbones with assorted (φ, ψ), random residue identities and
/// 0.05 Å coordinate noise.
pub fn synthetic_structures(seed_value: u64, count: usize) -> Vec<ProteinStructure> {
    const ANGLES: [(f64, f64); 4] = [
        (-57.0, -47.0),
        (-120.0, 130.0),
        (-75.0, 145.0),
        (-90.0, 0.0),
    ];
    let mut rng = seed::rng(seed_value);
    (0..count)
        .map(|k| {
            let len = rng.gen_range(8..13);
            let codes: Vec<&str> = (0..len)
                .map(|_| CODES[rng.gen_range(0..CODES.len())])
                .collect();
            let (phi, psi) = ANGLES[k % ANGLES.len()];
            let mut s = ideal_chain(
                &format!("prot{k:02}"),
                &codes,
                phi.to_radians(),
                psi.to_radians(),
            );
            for r in &mut s.residues {
                for p in [&mut r.n, &mut r.ca, &mut r.c] {
                    *p = *p
                        + Vec3::new(
                            rng.gen_range(-0.05..0.05),
                            rng.gen_range(-0.05..0.05),
                            rng.gen_range(-0.05..0.05),
                        );
                }
            }
            s
        })
        .collect()
}

/// Writes one PDB file per structure, named `<id>.pdb`.
pub fn write_pdbs(dir: &Path, structures: &[ProteinStructure]) -> Vec<PathBuf> {
    fs::create_dir_all(dir).unwrap();
    structures
        .iter()
        .map(|s| {
            let path = dir.join(format!("{}.pdb", s.id));
            fs::write(&path, pdb_text(s)).unwrap();
            path
        })
        .collect()
}

pub fn protssl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_protssl"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("UTF-8 path")
}

/// Small model dimensions so CLI runs finish quickly.
pub const SMALL: [&str; 10] = [
    "--set",
    "hidden=8",
    "--set",
    "seq_dim=6",
    "--set",
    "disc_dim=6",
    "--set",
    "rbf_count=6",
    "--set",
    "bins=10",
];

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}
