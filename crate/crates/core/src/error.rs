use std::io;

use thiserror::Error;

/// Failures of the field-file format.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic {0:?}")]
    Magic([u8; 4]),
    #[error("unsupported version {0}")]
    Version(u32),
    #[error("unknown group kind tag {0}")]
    GroupTag(u8),
    #[error("file truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("malformed header: {0}")]
    Header(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("group kind mismatch: {0}")]
    KindMismatch(String),
    #[error("logarithm at the branch cut (half-trace {half_trace:.3e})")]
    BranchCut { half_trace: f64 },
    #[error("lattice boundary: {0}")]
    Boundary(String),
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("diagnostic unavailable: {0}")]
    DiagnosticUnavailable(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
