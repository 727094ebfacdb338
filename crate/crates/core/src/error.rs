use std::path::PathBuf;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    Lattice(String),

    #[error("invalid potential: {0}")]
    Potential(String),

    #[error("invalid model: {0}")]
    Model(String),

    #[error("invalid sector: {0}")]
    Sector(String),

    #[error("size mismatch: {0}")]
    Mismatch(String),

    #[error("sector dimension {dim} exceeds budget {budget}")]
    Budget { dim: usize, budget: usize },

    #[error(
        "eigensolver did not converge after {iterations} iterations (residual {residual:.3e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("dense eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("parameter vector has length {got}, ansatz expects {expected}")]
    Parameters { expected: usize, got: usize },

    #[error("filling curve: {0}")]
    Curve(String),

    #[error("functional domain error: {0}")]
    Domain(String),

    #[error("root finding failed: {0}")]
    RootFind(String),

    #[error("SCF input: {0}")]
    Scf(String),

    #[error("functional file {path}: {msg}")]
    FunctionalFile { path: PathBuf, msg: String },

    #[error("config {location}: {msg}")]
    Config { location: String, msg: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
