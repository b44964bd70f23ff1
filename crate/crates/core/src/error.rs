use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("sector mismatch: {0}")]
    SectorMismatch(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid Hamiltonian: {0}")]
    Hamiltonian(String),

    #[error("invalid circuit: {0}")]
    Circuit(String),

    #[error("noise configuration is not a valid channel: {0}")]
    NonCptp(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("empty subspace: {0}")]
    EmptySubspace(String),

    #[error("missing contribution: {0}")]
    MissingContribution(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
