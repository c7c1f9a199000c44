//! Configuration, corrector cache, result tables and the command drivers
//! behind the `kfp` binary.

pub mod cache;
mod commands;
mod config;
pub mod table;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use cache::{cache_dir, load_or_build, CacheOutcome};
pub use commands::{run, Cli, Command, RunOutput};
pub use config::{CellSpec, HomogSpec, McSpec, ModelSpec, RegularitySpec, RunConfig};
pub use table::{write_table, Cell, Meta, Table};

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("corrector cache invalid: {0}; rerun with --force to re-solve")]
    CacheInvalid(String),
    #[error("{0}")]
    Failed(String),
    #[error(transparent)]
    Spectral(#[from] crate::spectral::SpectralError),
    #[error(transparent)]
    Cell(#[from] crate::cell::CellError),
    #[error(transparent)]
    Langevin(#[from] crate::langevin::LangevinError),
    #[error(transparent)]
    Experiment(#[from] crate::experiments::ExperimentError),
    #[error(transparent)]
    HetPoly(#[from] crate::hetpoly::HetPolyError),
}

impl PersistError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        PersistError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes.iter().fold(OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(PRIME))
}
