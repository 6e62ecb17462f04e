//! Configuration-driven experiment runner.
//!
//! A run produces a directory with `metrics.csv`, `iterations.csv` (line
//! experiments), signal dumps under `signals/`, the resolved `config.json` and
//! a `manifest.json`. Every CSV row carries the config hash and the trial's
//! signal seed; rerunning a config rewrites the CSVs byte for byte.

use std::path::{Path, PathBuf};

use thiserror::Error;

mod config;
mod io;
mod run;

pub use config::{
    AcquisitionParams, ExperimentConfig, ExperimentKind, KernelParams, PatchParams, SeedParams, SignalParams,
    IMAGE_THRESHOLD, PRESETS,
};
pub use io::{read_signal_csv, write_hinton_csv, write_pgm, write_signal_csv};
pub use run::{
    bit_budget_report, generate, recover_file, run_experiment, write_bundle, GeneratedTrial, IterationRow, MetricRow,
    RunOutput, SignalDump,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Signal(#[from] crate::signal::SignalError),
    #[error(transparent)]
    Acquisition(#[from] crate::acquisition::AcquisitionError),
    #[error(transparent)]
    Bsr(#[from] crate::solver::BsrError),
    #[error(transparent)]
    Patch(#[from] crate::patch::PatchError),
    #[error(transparent)]
    Baseline(#[from] crate::baselines::BaselineError),
}

impl HarnessError {
    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        HarnessError::Config { field: field.into(), message: message.into() }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.to_path_buf(), source }
    }
}
