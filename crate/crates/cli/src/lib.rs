//! Batch driver for point generation sweeps: configuration, artifacts and
//! comparison tables.

use std::path::PathBuf;

use thiserror::Error;

pub mod compare;
pub mod config;
pub mod run;

pub use compare::{compare, Comparison};
pub use config::ExperimentConfig;
pub use run::{run_config, Overrides, RunReport};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("missing artifacts: {}", .0.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "))]
    MissingArtifacts(Vec<PathBuf>),

    #[error(transparent)]
    Core(#[from] fekete_core::Error),
}
