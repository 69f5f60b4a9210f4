use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operands of a tensor op have incompatible shapes.
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    /// Checked mode found a NaN or infinity in an op's output.
    NonFinite {
        op: &'static str,
    },
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },
    /// Collinear or coincident points; `residue` is set when raised from a chain.
    DegenerateGeometry {
        residue: Option<usize>,
    },
    NoMaskable,
    BatchTooSmall {
        size: usize,
    },
    MissingEmbedding(String),
    MissingParam(String),
    LabelOutOfRange {
        label: usize,
        classes: usize,
    },
    EmptyDataset,
    InvalidConfig(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ShapeMismatch { op, left, right } => write!(
                f,
                "shape mismatch in {op}: {}x{} vs {}x{}",
                left.0, left.1, right.0, right.1
            ),
            Error::NonFinite { op } => write!(f, "non-finite value produced by {op}"),
            Error::DimensionMismatch {
                what,
                expected,
                found,
            } => write!(
                f,
                "dimension mismatch for {what}: expected {expected}, found {found}"
            ),
            Error::DegenerateGeometry { residue: Some(i) } => {
                write!(f, "degenerate backbone geometry at residue {i}")
            }
            Error::DegenerateGeometry { residue: None } => {
                write!(f, "degenerate geometry: collinear or coincident points")
            }
            Error::NoMaskable => write!(f, "no residue has a defined dihedral angle to mask"),
            Error::BatchTooSmall { size } => {
                write!(f, "batch of {size} is too small to form negative pairs")
            }
            Error::MissingEmbedding(id) => write!(f, "no sequence embedding for protein {id}"),
            Error::MissingParam(name) => write!(f, "missing parameter {name}"),
            Error::LabelOutOfRange { label, classes } => {
                write!(f, "label {label} out of range for {classes} classes")
            }
            Error::EmptyDataset => write!(f, "dataset is empty"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
