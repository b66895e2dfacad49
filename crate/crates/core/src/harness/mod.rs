//! Experiment driver behind the `sardonics` binary: model generation, runs,
//! adaptation, sampler comparison and the correctness suites.

pub mod config;
mod commands;
mod verify;

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use commands::{
    cmd_adapt, cmd_compare, cmd_generate, cmd_run, initial_state, run_seed, trace_file_name, AdaptArtifacts, CompareReport,
    RunReport, SamplerReport, SeedRun, SeedSummary,
};
pub use config::{AdaptSection, ExperimentConfig, ModelSpec, Overrides, SamplerSpec};
pub use verify::{
    cmd_verify, verify, weight_tree_chi_square, weight_tree_mismatches, CheckResult, VerifyLevel, VerifyReport,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("{path}: {source}")]
    File { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Kernel(#[from] crate::saw::KernelError),
    #[error(transparent)]
    Baseline(#[from] crate::baseline::BaselineError),
    #[error(transparent)]
    BayesOpt(#[from] crate::bayes_opt::BayesOptError),
    #[error(transparent)]
    Diagnostics(#[from] crate::diagnostics::DiagnosticsError),
    #[error(transparent)]
    Oracle(#[from] crate::oracle::OracleError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn read_text(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|source| HarnessError::File {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_file(path: &Path, contents: &[u8]) -> Result<(), HarnessError> {
    std::fs::write(path, contents).map_err(|source| HarnessError::File {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn create_dir(path: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(path).map_err(|source| HarnessError::File {
        path: path.to_path_buf(),
        source,
    })
}
