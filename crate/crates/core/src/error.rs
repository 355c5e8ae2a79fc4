use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error(
        "eigenvalue iteration did not converge after {iterations} sweeps \
         ({found} of {dim} eigenvalues deflated)"
    )]
    NoConvergence {
        iterations: usize,
        found: usize,
        dim: usize,
    },

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("unsupported polynomial structure: {0}")]
    Structure(String),

    #[error("alphabet mismatch: {0}")]
    Alphabet(String),

    #[error("memory budget of {budget} stored amplitudes exceeded at level {level}")]
    Budget { budget: usize, level: usize },

    #[error("lambda coincides with the constant term; the shifted polynomial is not invertible there")]
    ShiftDegenerate,

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
