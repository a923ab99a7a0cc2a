//! Spectrum-level experiments: trace/semicircle sanity, Schur complement
//! residuals, and eigenvalue rigidity.

use std::io::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use minorlab::eigen::HermitianMatrix;
use minorlab::gue::{
    sample_gue_spectrum, sample_gue_with, sample_tridiagonal_gue, schur_residual, trial_rng,
    GueMatrix, Spectrum,
};
use minorlab::semicircle::semicircle_cdf;

use super::{mean, phase, stderr_mean};
use crate::config::ExperimentConfig;
use crate::outputs::{run_trials, CsvLog};
use crate::report::Check;

/// Kolmogorov-Smirnov distance between the rescaled empirical spectral
/// distribution and the semicircle law.
fn semicircle_ks(eigs: &[f64]) -> f64 {
    let n = eigs.len() as f64;
    let scale = (2.0 * n).sqrt();
    let mut d: f64 = 0.0;
    for (i, &lam) in eigs.iter().enumerate() {
        let u = semicircle_cdf(lam / scale);
        d = d.max((u - (i + 1) as f64 / n).abs());
        d = d.max((u - i as f64 / n).abs());
    }
    d
}

/// Trace moment `tr H^2` at small fixed N plus a per-trial KS test of the
/// empirical spectral measure at the configured size.
pub fn semicircle(config: &ExperimentConfig, out_dir: &Path) -> Result<(Vec<Check>, CsvLog)> {
    let mut log = CsvLog::new("semicircle");
    let mut checks = Vec::new();
    let seed = config.seed;

    // Phase 1: E tr H^2 = N^2/2 at N = 8.
    let n_small = 8usize;
    let traces = run_trials(config.workers, config.trials, |t| {
        let h: HermitianMatrix = sample_gue_with(n_small, &mut trial_rng(seed, t));
        h.frobenius_norm().powi(2)
    })?;
    for (t, &v) in traces.iter().enumerate() {
        log.push(n_small, t as u64, "tr_h2", v);
    }
    let target = (n_small * n_small) as f64 / 2.0;
    let mu = mean(&traces);
    let se = stderr_mean(&traces);
    checks.push(
        Check::pass_if(
            "trace-moment",
            (mu - target).abs() < 3.0 * se,
            mu,
            format!("target {target}, stderr {se:.4}"),
        )
        .with_interval(mu - 3.0 * se, mu + 3.0 * se),
    );

    // Phase 2: semicircle KS at the configured size, capped at 100 trials
    // since each needs a full spectrum.
    let n = config.n[0];
    let ks_trials = config.trials.min(100);
    let spectra = run_trials(config.workers, ks_trials, |t| {
        sample_gue_spectrum(n, &mut trial_rng(seed, phase(1) + t))
    })?;
    let mut worst = 0.0f64;
    for (t, eigs) in spectra.iter().enumerate() {
        let eigs = eigs.as_ref().map_err(|e| anyhow::anyhow!("trial {t}: {e}"))?;
        let d = semicircle_ks(eigs);
        log.push(n, t as u64, "ks", d);
        worst = worst.max(d);
    }
    let tol = config.tol("ks", 0.05);
    checks.push(Check::pass_if(
        "semicircle-ks",
        worst < tol,
        worst,
        format!("max over {ks_trials} trials at N = {n}, tolerance {tol}"),
    ));

    if config.dump_spectra {
        let path = out_dir.join("spectra.bin");
        let mut out = std::io::BufWriter::new(
            std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?,
        );
        for (t, eigs) in spectra.iter().enumerate() {
            let eigs = eigs.as_ref().unwrap();
            let spec = Spectrum { level: n, eigenvalues: eigs.clone(), vectors: None };
            minorlab::gue::write_spectrum_record(&mut out, &spec, n as u32, phase(1) + t as u64)?;
        }
        out.flush()?;
    }

    Ok((checks, log))
}

/// Schur complement reconstruction residual against the direct spectrum.
pub fn schur(config: &ExperimentConfig) -> Result<(Vec<Check>, CsvLog)> {
    let mut log = CsvLog::new("schur");
    let n = config.n[0];
    let seed = config.seed;
    let residuals = run_trials(config.workers, config.trials, |t| {
        let gm = GueMatrix { matrix: sample_gue_with(n, &mut trial_rng(seed, t)), rng_seed: seed };
        schur_residual(&gm).map(|r| r.iter().fold(0.0f64, |a, &b| a.max(b)))
    })?;
    let mut worst = 0.0f64;
    for (t, r) in residuals.iter().enumerate() {
        let r = *r.as_ref().map_err(|e| anyhow::anyhow!("trial {t}: {e}"))?;
        log.push(n, t as u64, "residual", r);
        worst = worst.max(r);
    }
    let tol = config.tol("schur", 1e-7) * (n as f64).sqrt();
    let checks = vec![Check::pass_if(
        "schur-residual",
        worst < tol,
        worst,
        format!("max over {} trials at N = {n}, tolerance {tol:.3e}", config.trials),
    )];
    Ok((checks, log))
}

/// Bulk rigidity: `|lambda_i - sqrt(2N) gamma_{i/N}|` at the quartile
/// indices against the `5 log N / sqrt(N)` envelope.
pub fn rigidity(config: &ExperimentConfig) -> Result<(Vec<Check>, CsvLog)> {
    let mut log = CsvLog::new("rigidity");
    let n = config.n[0];
    let seed = config.seed;
    let indices = [n / 4, n / 2, 3 * n / 4];
    let envelope = 5.0 * (n as f64).ln() / (n as f64).sqrt();

    let devs = run_trials(config.workers, config.trials, |t| {
        let tri = sample_tridiagonal_gue(n, &mut trial_rng(seed, t));
        indices.map(|i| {
            let lam = tri.eigenvalues_in_index_range(i - 1, i)[0];
            minorlab::gaps::rigidity_deviation(n, i, lam)
        })
    })?;
    let labels = ["dev_q25", "dev_q50", "dev_q75"];
    let mut exceed = 0usize;
    let mut worst = 0.0f64;
    for (t, row) in devs.iter().enumerate() {
        for (label, &d) in labels.iter().zip(row) {
            log.push(n, t as u64, label, d);
            worst = worst.max(d);
            if d > envelope {
                exceed += 1;
            }
        }
    }
    let total = config.trials * indices.len();
    let frac = exceed as f64 / total as f64;
    let tol = config.tol("rigidity", 0.01);
    let checks = vec![Check::pass_if(
        "rigidity-exceedance",
        frac < tol,
        frac,
        format!("{exceed}/{total} above envelope {envelope:.4} (worst {worst:.4}) at N = {n}"),
    )];
    Ok((checks, log))
}
