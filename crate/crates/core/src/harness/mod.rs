//! Experiment runner: configuration, repeated runs, the brute-force grid
//! oracle, calibration gates and the algorithm comparison.

mod compare;
mod config;
mod grid;
mod output;
mod run;

pub use compare::{compare_algorithms, compare_variants, ordering_checks, CompareReport, OrderingCheck, VariantResult};
pub use config::{merge, parse_override, Algorithm, CompareConfig, ExperimentConfig, HooConfig, PooConfig, SpaceConfig};
pub use grid::{calibrate_check, calibration_report, grid_oracle, CalibrationReport, GateResult, GridPoint, GridResult, GRID_HEADER};
pub use output::{write_json, write_run_csv, RUN_HEADER};
pub use run::{mean_sd, run_algorithm, run_experiment, AlgorithmRun, PooDetails, SeedSummary, Summary, Variant};

use crate::bms::SimError;
use crate::search::SearchError;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cannot write or read `{path}`: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("simulation failed: {0}")]
    Sim(#[from] SimError),
    #[error("{0}")]
    Gate(String),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.to_path_buf(), source }
    }

    /// Process exit status for this error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Io { .. } => 3,
            HarnessError::Sim(_) => 4,
            HarnessError::Gate(_) => 5,
        }
    }
}

impl From<SearchError> for HarnessError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::InvalidParam { .. } => HarnessError::Config(e.to_string()),
            SearchError::Sim(s) => HarnessError::Sim(s),
        }
    }
}
