//! Experiment harness: configuration, drivers, and reporting for the
//! `gue-minor-lab` CLI.

pub mod config;
pub mod experiments;
pub mod outputs;
pub mod report;

use std::path::Path;

use anyhow::{Context, Result};

use config::ExperimentConfig;
use report::RunSummary;

/// Run one named experiment end to end with the config/environment output
/// directory resolution.
pub fn run(experiment: &str, config: &ExperimentConfig) -> Result<RunSummary> {
    let out_dir = config.resolved_out_dir();
    run_in(experiment, config, &out_dir)
}

/// Run one named experiment into an explicit output directory: validate
/// the config, execute the driver, and persist the CSV log and the JSON
/// report alongside any experiment-specific artifacts.
pub fn run_in(experiment: &str, config: &ExperimentConfig, out_dir: &Path) -> Result<RunSummary> {
    config.validate()?;
    if let Some(named) = &config.experiment {
        if named != experiment {
            anyhow::bail!("config names experiment {named:?} but {experiment:?} was requested");
        }
    }
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;

    let (checks, log) = experiments::dispatch(experiment, config, out_dir)?;

    let mut summary = RunSummary::new(experiment, config.seed, config.trials, config.n.clone());
    summary.checks = checks;

    log.write(&out_dir.join(format!("{experiment}.csv")))?;
    summary.write_json(&out_dir.join(format!("{experiment}_report.json")))?;
    Ok(summary)
}
