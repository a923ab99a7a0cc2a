use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use gue_minor_lab::config::ExperimentConfig;

/// Numerical experiments on GUE spectra, their minors, and the associated
/// determinantal point processes.
#[derive(Parser, Debug)]
#[command(name = "gue-minor-lab", version)]
struct Cli {
    /// Experiment to run: semicircle | gaps | gaudin-compare |
    /// dpp-consistency | pb-lemma | schur | universality |
    /// interlacing-variance | minor-variance | rigidity
    experiment: String,

    /// Path to the TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,

    /// Override the configured RNG seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Override the configured worker-thread count.
    #[arg(long)]
    workers: Option<usize>,

    /// Override the configured output directory (the environment variable
    /// takes precedence over both).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut config = match ExperimentConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(workers) = cli.workers {
        config.workers = workers;
    }
    if let Some(out) = cli.out {
        config.out_dir = out;
    }

    match gue_minor_lab::run(&cli.experiment, &config) {
        Ok(summary) => {
            summary.print();
            if summary.failed() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
