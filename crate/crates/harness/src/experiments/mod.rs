//! Experiment drivers. Each driver consumes a config, runs its Monte
//! Carlo or deterministic checks, and returns per-check verdicts plus the
//! flat per-trial CSV log.

use std::path::Path;

use anyhow::{bail, Result};

use crate::config::ExperimentConfig;
use crate::outputs::CsvLog;
use crate::report::Check;

mod dpp;
mod gaps;
mod minor;
mod spectra;

pub const EXPERIMENTS: &[&str] = &[
    "semicircle",
    "gaps",
    "gaudin-compare",
    "dpp-consistency",
    "pb-lemma",
    "schur",
    "universality",
    "interlacing-variance",
    "minor-variance",
    "rigidity",
];

pub fn dispatch(
    experiment: &str,
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<(Vec<Check>, CsvLog)> {
    match experiment {
        "semicircle" => spectra::semicircle(config, out_dir),
        "schur" => spectra::schur(config),
        "rigidity" => spectra::rigidity(config),
        "pb-lemma" => dpp::pb_lemma(config, out_dir),
        "dpp-consistency" => dpp::consistency(config, out_dir),
        "gaudin-compare" => dpp::gaudin_compare(config, out_dir),
        "gaps" => gaps::gap_bounds(config),
        "universality" => gaps::universality(config),
        "interlacing-variance" => gaps::interlacing_variance(config),
        "minor-variance" => minor::minor_variance(config, out_dir),
        other => bail!(
            "unknown experiment {other:?}; expected one of {}",
            EXPERIMENTS.join(" | ")
        ),
    }
}

/// Trial-index offsets decorrelating the RNG streams of distinct Monte
/// Carlo phases inside one experiment.
pub(crate) fn phase(p: u64) -> u64 {
    p << 32
}

pub(crate) fn mean(vals: &[f64]) -> f64 {
    vals.iter().sum::<f64>() / vals.len() as f64
}

/// Unbiased sample variance.
pub(crate) fn variance(vals: &[f64]) -> f64 {
    let mu = mean(vals);
    vals.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (vals.len() - 1) as f64
}

/// Standard error of the sample mean.
pub(crate) fn stderr_mean(vals: &[f64]) -> f64 {
    (variance(vals) / vals.len() as f64).sqrt()
}

/// Large-sample standard error of the sample variance.
pub(crate) fn stderr_var(vals: &[f64]) -> f64 {
    variance(vals) * (2.0 / vals.len() as f64).sqrt()
}

/// Least-squares slope of `y` against `x`.
pub(crate) fn slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let mx = mean(x);
    let my = mean(y);
    let sxy: f64 = x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|&a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Total-variation distance between an empirical count vector and a pmf.
pub(crate) fn tv_distance(counts: &[usize], total: usize, pmf: &[f64]) -> f64 {
    let len = counts.len().max(pmf.len());
    let mut tv = 0.0;
    for k in 0..len {
        let emp = counts.get(k).copied().unwrap_or(0) as f64 / total as f64;
        let exact = pmf.get(k).copied().unwrap_or(0.0);
        tv += (emp - exact).abs();
    }
    tv / 2.0
}
