//! Frames over block-erasure channels.
//!
//! Builds unit-norm tight frames by selecting rows of a DFT or Hadamard
//! matrix (optionally via a difference set, giving an equiangular tight
//! frame), models erasure of whole column blocks, and evaluates the
//! surviving subframes: Gram spectra against MANOVA / Marchenko-Pastur
//! references, NOMA average capacity and outage, and the space-time-code
//! error bound. A search module optimizes the column-to-block assignment
//! (and optionally the row set) for average capacity.

pub mod catalog;
pub mod erasure;
pub mod frames;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod search;
pub mod spectra;

/// Error type shared across the toolkit.
///
/// The variants map onto the CLI exit-code contract: `InvalidArgument`,
/// `Validation` and `Parse` are caller mistakes (exit 2), `Infeasible`
/// marks requests whose exact computation is out of reach (exit 3), and
/// `Numerical` marks a failed numerical kernel (exit 4).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
