//! Per-trial CSV persistence and the deterministic parallel trial runner.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;

/// Rows of the flat `experiment,N,trial,statistic,value` schema, one per
/// scalar statistic.
#[derive(Debug)]
pub struct CsvLog {
    experiment: String,
    rows: Vec<(usize, u64, String, f64)>,
}

impl CsvLog {
    pub fn new(experiment: &str) -> Self {
        CsvLog { experiment: experiment.to_string(), rows: Vec::new() }
    }

    pub fn push(&mut self, n: usize, trial: u64, statistic: &str, value: f64) {
        self.rows.push((n, trial, statistic.to_string(), value));
    }

    /// Append one trial's statistics in the given order.
    pub fn push_trial(&mut self, n: usize, trial: u64, stats: &[(String, f64)]) {
        for (statistic, value) in stats {
            self.rows.push((n, trial, statistic.clone(), *value));
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(
            std::fs::File::create(path)
                .with_context(|| format!("creating {}", path.display()))?,
        );
        writeln!(out, "experiment,N,trial,statistic,value")?;
        for (n, trial, statistic, value) in &self.rows {
            writeln!(out, "{},{n},{trial},{statistic},{value}", self.experiment)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Run `trial -> T` over `0..trials` on a pool of `workers` threads and
/// return results in trial order, so every downstream reduction is
/// independent of the worker count.
pub fn run_trials<T, F>(workers: usize, trials: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("building worker pool")?;
    Ok(pool.install(|| (0..trials as u64).into_par_iter().map(f).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_schema() {
        let mut log = CsvLog::new("schur");
        log.push(50, 0, "residual", 1.5e-9);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("schur.csv");
        log.write(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("experiment,N,trial,statistic,value"));
        assert_eq!(lines.next(), Some("schur,50,0,residual,0.0000000015"));
    }

    #[test]
    fn trial_order_is_deterministic_across_workers() {
        let one = run_trials(1, 64, |t| t * t).unwrap();
        let eight = run_trials(8, 64, |t| t * t).unwrap();
        assert_eq!(one, eight);
    }
}
