//! Configuration-driven runner for the dfs-lab experiments.

pub mod config;
pub mod experiments;
pub mod output;
pub mod setup;

use std::path::{Path, PathBuf};

use dfs_lab::DfsError;

use config::{Config, Experiment, Overrides};
use output::Report;
use setup::Setup;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(#[from] DfsError),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

/// Runs one experiment in memory.
pub fn execute(experiment: Experiment, cfg: Config) -> Result<Report, CliError> {
    let s = Setup::new(cfg, experiment)?;
    let order = s.execution_order(&s.used_protocols(), experiments::grouping_reps(&s))?;
    let results = match experiment {
        Experiment::ThetaScan => output::Results::ThetaScan(experiments::theta_scan(&s)?),
        Experiment::GaugeScan => output::Results::GaugeScan(experiments::gauge_scan(&s)?),
        Experiment::Decay => output::Results::Decay(experiments::decay(&s)?),
        Experiment::Scaling => output::Results::Scaling(experiments::scaling(&s)?),
    };
    Ok(Report::new(experiment, s.cfg, order, results))
}

/// Loads, runs and writes one experiment; returns the JSON path.
pub fn run(experiment: Experiment, config_path: &Path, overrides: &Overrides) -> Result<PathBuf, CliError> {
    let mut cfg = Config::load(config_path)?;
    cfg.apply(overrides);
    let out_dir = cfg.output.clone().unwrap_or_else(|| PathBuf::from("results"));
    let csv = cfg.csv;
    let report = execute(experiment, cfg)?;
    report.write(&out_dir, csv)
}
