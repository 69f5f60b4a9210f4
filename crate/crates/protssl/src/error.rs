use std::io;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] protssl_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    /// Line too short for the coordinate columns, or non-numeric fields.
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },

    /// No backbone-complete residue in the selected chain.
    #[error("chain {chain:?} has no residue with N, CA and C")]
    EmptyChain { chain: char },

    #[error("chain {0:?} not found")]
    ChainNotFound(char),

    /// A binary file does not follow its layout.
    #[error("bad {format} data: {reason}")]
    Format {
        format: &'static str,
        reason: String,
    },

    #[error("{source_name} line {line}: {reason}")]
    Parse {
        source_name: String,
        line: usize,
        reason: String,
    },

    /// The command line is well-formed but unusable.
    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
