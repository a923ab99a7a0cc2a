//! Determinantal-side experiments: the Boolean-sum lemma, counting
//! consistency between kernels and samples, and the Gaudin gap density.

use std::path::Path;

use anyhow::Result;
use minorlab::dpp::{
    nystrom_restrict_gated, prepare_sampler, restriction_diagnostics, Kernel,
};
use minorlab::gaudin::Gaudin;
use minorlab::gue::{sample_tridiagonal_gue, trial_rng};
use minorlab::pb::PoissonBinomial;
use minorlab::semicircle::{semicircle_cdf, BulkScaling};
use minorlab::{gaps, quadrature};
use rand::Rng;

use super::{mean, phase, tv_distance};
use crate::config::ExperimentConfig;
use crate::outputs::{run_trials, CsvLog};
use crate::report::Check;

/// Exact Poisson-binomial pmf by exhaustive subset enumeration; only
/// feasible for small systems, which is the point — it shares nothing
/// with the convolution code it checks.
fn enumerate_pmf(means: &[f64]) -> Vec<f64> {
    let n = means.len();
    let mut pmf = vec![0.0; n + 1];
    for mask in 0u32..(1 << n) {
        let mut p = 1.0;
        for (j, &l) in means.iter().enumerate() {
            p *= if mask >> j & 1 == 1 { l } else { 1.0 - l };
        }
        pmf[mask.count_ones() as usize] += p;
    }
    pmf
}

/// Random-case verification of the Poisson-binomial lemma: pmf against
/// enumeration, the zero-count and multi-count bounds, and the Bernstein
/// tail bound from the exact pmf.
pub fn pb_lemma(config: &ExperimentConfig, _out_dir: &Path) -> Result<(Vec<Check>, CsvLog)> {
    let mut log = CsvLog::new("pb-lemma");
    let seed = config.seed;
    let cases = run_trials(config.workers, config.trials, |t| {
        let mut rng = trial_rng(seed, t);
        let len = rng.gen_range(1..=20usize);
        let means: Vec<f64> = (0..len).map(|_| rng.gen::<f64>()).collect();
        let pb = PoissonBinomial::new(means.clone());
        let pmf = pb.pmf();
        let enum_err = if len <= 10 {
            enumerate_pmf(&means)
                .iter()
                .zip(&pmf)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max)
        } else {
            0.0
        };
        let b = pb.bounds();
        let zero_slack = b.bound_zero - b.p_zero;
        let multi_slack = b.bound_more_than_one - b.p_more_than_one;
        let bernstein_slack = [0.5, 1.0, 2.0, 4.0]
            .iter()
            .map(|&t| pb.bernstein_bound(t) - pb.tail_two_sided(t))
            .fold(f64::INFINITY, f64::min);
        (len, enum_err, zero_slack, multi_slack, bernstein_slack)
    })?;

    let mut worst_enum = 0.0f64;
    let mut enumerated = 0usize;
    let (mut min_zero, mut min_multi, mut min_bern) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    for (t, &(len, enum_err, zs, ms, bs)) in cases.iter().enumerate() {
        log.push(len, t as u64, "pmf_enum_err", enum_err);
        log.push(len, t as u64, "zero_bound_slack", zs);
        if len <= 10 {
            enumerated += 1;
            worst_enum = worst_enum.max(enum_err);
        }
        min_zero = min_zero.min(zs);
        min_multi = min_multi.min(ms);
        min_bern = min_bern.min(bs);
    }
    let tol = config.tol("pb_pmf", 1e-12);
    // The bound inequalities are exact; allow the same 1e-12 of pmf
    // rounding as the library's own assertions.
    let slack_floor = -1e-12;
    let checks = vec![
        Check::pass_if(
            "pmf-enumeration",
            worst_enum < tol,
            worst_enum,
            format!("max error over {enumerated} enumerable cases, tolerance {tol:.1e}"),
        ),
        Check::pass_if(
            "zero-count-bound",
            min_zero >= slack_floor,
            min_zero,
            format!("minimum slack over {} cases", cases.len()),
        ),
        Check::pass_if(
            "multi-count-bound",
            min_multi >= slack_floor,
            min_multi,
            format!("minimum slack over {} cases", cases.len()),
        ),
        Check::pass_if(
            "bernstein-bound",
            min_bern >= slack_floor,
            min_bern,
            "minimum slack over t in {0.5, 1, 2, 4}".to_string(),
        ),
    ];
    Ok((checks, log))
}

/// Kernel-level counting consistency: trace mean against the semicircle
/// count, logarithmic number variance, and counting-statistic laws of
/// sine and GUE samples against the Nystrom Poisson-binomial prediction.
pub fn consistency(config: &ExperimentConfig, _out_dir: &Path) -> Result<(Vec<Check>, CsvLog)> {
    let mut log = CsvLog::new("dpp-consistency");
    let mut checks = Vec::new();
    let seed = config.seed;

    // Mean count above bulk energy x = 0.3 at N = 200 from the kernel
    // trace, against N (1 - F(0.3)).
    let n_mean = 200usize;
    let x = 0.3;
    let lo = BulkScaling::new(n_mean, x).to_physical(0.0);
    let hi = (2.0 * n_mean as f64).sqrt() + 2.0;
    let rule = minorlab::dpp::kernel_grid(&Kernel::ChristoffelDarboux { n: n_mean }, lo, hi);
    let trace: f64 = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&t, &w)| w * minorlab::dpp::eval_cd_diagonal(n_mean, t))
        .sum();
    let target = n_mean as f64 * (1.0 - semicircle_cdf(x));
    checks.push(Check::pass_if(
        "trace-mean",
        (trace - target).abs() < config.tol("trace_mean", 0.5),
        trace,
        format!("target {target:.4} at N = {n_mean}, x = {x}"),
    ));

    // Number variance of [f_0(0), +inf) at N = 2000 against the
    // (1/(2 pi^2)) log N law.
    let n_var = 2000usize;
    let top = (2.0 * n_var as f64).sqrt() + 2.0;
    let diag = restriction_diagnostics(
        &Kernel::ChristoffelDarboux { n: n_var },
        (0.0, top),
        (0.0, top),
        0.0,
        false,
    )?;
    let law = (n_var as f64).ln() / (2.0 * std::f64::consts::PI.powi(2));
    let ratio = diag.a / law;
    checks.push(
        Check::pass_if(
            "number-variance-ratio",
            (0.7..1.3).contains(&ratio),
            ratio,
            format!("variance {:.4} vs (log N)/(2 pi^2) = {law:.4} at N = {n_var}", diag.a),
        )
        .with_interval(0.7, 1.3),
    );

    // Sine-process cardinality on [0, 3] against the Poisson-binomial
    // mixture of the Nystrom occupation numbers.
    let rk = nystrom_restrict_gated(&Kernel::Sine, 0.0, 3.0)?;
    let pmf = PoissonBinomial::new(rk.mu.clone()).pmf();
    let sampler = prepare_sampler(&Kernel::Sine, &rk, 4);
    let draws = run_trials(config.workers, config.trials, |t| {
        sampler.sample(&mut trial_rng(seed, phase(1) + t)).len()
    })?;
    let mut counts = vec![0usize; pmf.len()];
    for (t, &k) in draws.iter().enumerate() {
        log.push(0, t as u64, "sine_count", k as f64);
        if k < counts.len() {
            counts[k] += 1;
        }
    }
    let tv_sine = tv_distance(&counts, draws.len(), &pmf);
    checks.push(Check::pass_if(
        "sine-cardinality-tv",
        tv_sine < config.tol("sine_tv", 0.03),
        tv_sine,
        format!("{} draws on [0, 3]", draws.len()),
    ));

    // GUE counting statistic N_{0,0,3} at N = 500 against the same
    // machinery applied to the finite-N kernel on the physical window.
    let n_gue = 500usize;
    let h = 3.0;
    let scaling = BulkScaling::new(n_gue, 0.0);
    let (f0, fh) = (scaling.to_physical(0.0), scaling.to_physical(h));
    let rk_gue = nystrom_restrict_gated(&Kernel::ChristoffelDarboux { n: n_gue }, f0, fh)?;
    let pmf_gue = PoissonBinomial::new(rk_gue.mu.clone()).pmf();
    let gue_counts = run_trials(config.workers, config.trials, |t| {
        let tri = sample_tridiagonal_gue(n_gue, &mut trial_rng(seed, phase(2) + t));
        tri.count_below(fh) - tri.count_below(f0)
    })?;
    let mut counts = vec![0usize; pmf_gue.len()];
    for (t, &k) in gue_counts.iter().enumerate() {
        log.push(n_gue, t as u64, "gue_count", k as f64);
        if k < counts.len() {
            counts[k] += 1;
        }
    }
    let tv_gue = tv_distance(&counts, gue_counts.len(), &pmf_gue);
    checks.push(Check::pass_if(
        "gue-counting-tv",
        tv_gue < config.tol("gue_tv", 0.05),
        tv_gue,
        format!("{} trials at N = {n_gue}, h = {h}", gue_counts.len()),
    ));

    Ok((checks, log))
}

/// Empirical bulk gap density against the Fredholm-determinant Gaudin
/// density, plus quadrature identities for its normalization and mean.
pub fn gaudin_compare(config: &ExperimentConfig, out_dir: &Path) -> Result<(Vec<Check>, CsvLog)> {
    let mut log = CsvLog::new("gaudin-compare");
    let mut checks = Vec::new();
    let n = config.n[0];
    let i = n / 2;
    let seed = config.seed;

    let samples = run_trials(config.workers, config.trials, |t| {
        let tri = sample_tridiagonal_gue(n, &mut trial_rng(seed, t));
        let pair = tri.eigenvalues_in_index_range(i - 1, i + 1);
        gaps::normalized_gap(n, i, pair[0], pair[1])
    })?;
    for (t, &g) in samples.iter().enumerate() {
        log.push(n, t as u64, "gap", g);
    }

    let gaudin = Gaudin::new();
    let hist = gaps::gap_histogram(&samples, 0.0, 4.0, 40);
    let mut sup_err = 0.0f64;
    for (k, &d) in hist.density.iter().enumerate() {
        let center = 0.05 + 0.1 * k as f64;
        sup_err = sup_err.max((d - gaudin.p(center)?).abs());
    }
    checks.push(Check::pass_if(
        "density-sup-error",
        sup_err < config.tol("gaudin_sup", 0.05),
        sup_err,
        format!("40 bins on [0, 4], {} gaps at index N/2, N = {n}", samples.len()),
    ));

    // int_0^Y p = E'(Y) + 1 and int_0^Y y p = Y E'(Y) - E(Y) + 1, both by
    // parts from p = E''; at Y = 6 the remaining tails are < 1e-8.
    let y_cut = 6.0;
    let ep = gaudin.e_prime(y_cut)?;
    let total = ep + 1.0;
    checks.push(Check::pass_if(
        "density-normalization",
        (total - 1.0).abs() < config.tol("gaudin_mass", 1e-4),
        total,
        format!("E'({y_cut}) + 1"),
    ));
    let first_moment = y_cut * ep - gaudin.e(y_cut)? + 1.0;
    checks.push(Check::pass_if(
        "density-mean-quadrature",
        (first_moment - 1.0).abs() < config.tol("gaudin_mean", 1e-3),
        first_moment,
        format!("Y E'(Y) - E(Y) + 1 at Y = {y_cut}"),
    ));
    let mc_mean = mean(&samples);
    checks.push(Check::pass_if(
        "mc-mean",
        (mc_mean - 1.0).abs() < config.tol("gaudin_mc_mean", 0.02),
        mc_mean,
        format!("{} Monte Carlo gaps", samples.len()),
    ));

    // Direct quadrature cross-check of the mass on [0, 4] against the
    // by-parts identity at the same cutoff.
    let rule = quadrature::gauss_legendre_on(64, 1e-4, 4.0);
    let mut quad_mass = 0.0;
    for (&y, &w) in rule.nodes.iter().zip(&rule.weights) {
        quad_mass += w * gaudin.p(y)?;
    }
    let by_parts = gaudin.e_prime(4.0)? + 1.0;
    checks.push(Check::pass_if(
        "mass-route-agreement",
        (quad_mass - by_parts).abs() < 1e-3,
        quad_mass - by_parts,
        format!("direct quadrature {quad_mass:.6} vs by-parts {by_parts:.6} on [0, 4]"),
    ));

    let path = out_dir.join("gaudin_table.csv");
    let mut w = std::io::BufWriter::new(std::fs::File::create(&path)?);
    gaudin.write_table_csv(&mut w, 0.05, 4.0, 80)?;

    Ok((checks, log))
}
