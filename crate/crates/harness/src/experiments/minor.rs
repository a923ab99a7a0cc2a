//! Minor-kernel experiment: the coefficient table `a_{j,k}` and the
//! closed-form mean and variance of the interlacing flow functional
//! against direct Monte Carlo.

use std::path::Path;

use anyhow::{Context, Result};
use minorlab::gue::{sample_two_level, trial_rng};
use minorlab::minor_kernel::{
    alpha_constant, f_integral_routes, first_moment, variance_formula, CutoffEta,
};

use super::{mean, stderr_mean, stderr_var, variance};
use crate::config::ExperimentConfig;
use crate::outputs::{run_trials, CsvLog};
use crate::report::Check;

pub fn minor_variance(config: &ExperimentConfig, out_dir: &Path) -> Result<(Vec<Check>, CsvLog)> {
    let mut log = CsvLog::new("minor-variance");
    let mut checks = Vec::new();
    let n = config.n[0];
    let m = config.m[0];
    let i = n / 2;
    let seed = config.seed;

    let vf = variance_formula(i, n, m)?;
    let fm = first_moment(i, n, m)?;
    let table = &vf.table;

    // Dual-method agreement and the 2/|j-k| envelope on the base table.
    let mut worst_dual = 0.0f64;
    let mut worst_envelope = 0.0f64;
    for j in table.j_lo..=table.j_hi {
        for k in table.k_lo..=table.k_hi {
            let a = table.get(j, k);
            if j != k {
                worst_dual = worst_dual.max((a - table.get_wronskian(j, k)).abs());
                worst_envelope = worst_envelope.max(a.abs() * j.abs_diff(k) as f64);
            }
        }
    }
    checks.push(Check::pass_if(
        "ajk-dual-method",
        worst_dual < config.tol("ajk_dual", 1e-8),
        worst_dual,
        format!(
            "max |direct - Wronskian| on j in {}..={}, k in {}..={}",
            table.j_lo, table.j_hi, table.k_lo, table.k_hi
        ),
    ));
    checks.push(Check::pass_if(
        "ajk-envelope",
        worst_envelope <= config.tol("ajk_envelope", 2.0),
        worst_envelope,
        "max |a_{j,k}| |j - k| off the diagonal".to_string(),
    ));
    checks.push(Check::report(
        "variance-truncation",
        vf.truncation_change / vf.value.abs(),
        format!("relative change on halving the |j-k| cutoff {}", vf.cutoff),
    ));

    // Monte Carlo of the windowed flow functional (1/m) int_0^m F dt at
    // the same (N, i, m); each trial also cross-checks the two evaluation
    // routes of the functional.
    let mc_trials = config.trials.min(3000);
    let alpha = alpha_constant(i, n, false)?;
    let eta = CutoffEta::new(i, n, m);
    let rows = run_trials(config.workers, mc_trials, |t| -> Result<(f64, f64)> {
        let s = sample_two_level(n, &mut trial_rng(seed, t), None)?;
        let (by_eta, by_walk) = f_integral_routes(&s.top, &s.minor, &eta, alpha);
        Ok((by_eta, (by_eta - by_walk).abs()))
    })?;
    let mut vals = Vec::with_capacity(mc_trials);
    let mut worst_route = 0.0f64;
    for (t, row) in rows.iter().enumerate() {
        let &(v, route_err) = row.as_ref().map_err(|e| anyhow::anyhow!("trial {t}: {e}"))?;
        log.push(n, t as u64, "f_integral", v);
        vals.push(v);
        worst_route = worst_route.max(route_err);
    }
    checks.push(Check::pass_if(
        "f-integral-route-agreement",
        worst_route < config.tol("routes", 1e-9),
        worst_route,
        format!("max |eta-sum - interval-walk| over {mc_trials} trials"),
    ));

    let mc_mean = m as f64 * mean(&vals);
    let se_mean = m as f64 * stderr_mean(&vals);
    checks.push(
        Check::pass_if(
            "first-moment",
            (fm - mc_mean).abs() < 3.0 * se_mean,
            fm,
            format!("closed form vs MC {mc_mean:.4} +- {se_mean:.4} at N = {n}, m = {m}"),
        )
        .with_interval(mc_mean - 3.0 * se_mean, mc_mean + 3.0 * se_mean),
    );

    let mc_var = variance(&vals);
    let se_var = stderr_var(&vals);
    let allowance = 0.1 * mc_var + 3.0 * se_var;
    checks.push(
        Check::pass_if(
            "variance-formula",
            (vf.value - mc_var).abs() < allowance,
            vf.value,
            format!("closed form vs MC {mc_var:.5} +- {se_var:.5}, allowance {allowance:.5}"),
        )
        .with_interval(mc_var - allowance, mc_var + allowance),
    );

    let path = out_dir.join("ajk.csv");
    let mut w = std::io::BufWriter::new(
        std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?,
    );
    table.write_csv(&mut w)?;

    // Per-pair contributions to the three sums of the variance
    // expression, over the dual-method base table.
    let path = out_dir.join("div_terms.csv");
    let mut w = std::io::BufWriter::new(
        std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?,
    );
    use std::io::Write as _;
    writeln!(w, "j,k,first,second,cross")?;
    for j in table.j_lo..n {
        for k in (n - 1).max(table.k_lo)..=table.k_hi {
            let a = table.get(j, k);
            let first = if k >= n { a * a } else { 0.0 };
            let second = if j < n - 1 { a * a } else { 0.0 };
            let cross = if j > table.j_lo && j >= 1 && k >= n {
                -2.0 * (j as f64 / k as f64).sqrt() * a * table.get(j - 1, k - 1)
            } else {
                0.0
            };
            if first != 0.0 || second != 0.0 || cross != 0.0 {
                writeln!(w, "{j},{k},{first},{second},{cross}")?;
            }
        }
    }
    w.flush()?;

    Ok((checks, log))
}
