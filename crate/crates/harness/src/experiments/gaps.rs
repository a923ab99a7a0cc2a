//! Gap-law experiments: tail and variance bounds for top-level gaps,
//! top/minor gap universality, and variance growth of interlacing-gap
//! sums.

use anyhow::{bail, Result};
use minorlab::gaps::{interlacing_gap, normalized_gap, wilson_interval};
use minorlab::gue::{sample_tridiagonal_gue, sample_two_level, trial_rng};
use rand::Rng;

use super::{mean, phase, slope, stderr_mean, variance};
use crate::config::ExperimentConfig;
use crate::outputs::{run_trials, CsvLog};
use crate::report::Check;

/// Tail bounds, moment scaling in N, and variance growth of windowed sums
/// for the normalized bulk gap `g_{N/2}`.
pub fn gap_bounds(config: &ExperimentConfig) -> Result<(Vec<Check>, CsvLog)> {
    let mut log = CsvLog::new("gaps");
    let mut checks = Vec::new();
    let n = config.n[0];
    let i0 = n / 2;
    let seed = config.seed;
    let (bulk_lo, bulk_hi) = minorlab::gaps::bulk_range(n, config.delta);
    let in_bulk = |i: usize| -> Result<usize> {
        if (bulk_lo..=bulk_hi).contains(&i) {
            Ok(i)
        } else {
            bail!("index {i} outside the delta = {} bulk {bulk_lo}..={bulk_hi}", config.delta)
        }
    };
    in_bulk(i0)?;

    // Phase 1: single gap at N/2.
    let singles = run_trials(config.workers, config.trials, |t| {
        let tri = sample_tridiagonal_gue(n, &mut trial_rng(seed, t));
        let pair = tri.eigenvalues_in_index_range(i0 - 1, i0 + 1);
        normalized_gap(n, i0, pair[0], pair[1])
    })?;
    for (t, &g) in singles.iter().enumerate() {
        log.push(n, t as u64, "gap", g);
    }
    let trials = singles.len();

    // Upper tail P(g >= h) <= 10 exp(-h/4) at the Wilson upper limit.
    let mut worst_upper = f64::NEG_INFINITY;
    for h in [1.0, 2.0, 3.0, 4.0] {
        let hits = singles.iter().filter(|&&g| g >= h).count();
        let (_, hi) = wilson_interval(hits, trials);
        let bound = 10.0 * (-h / 4.0).exp();
        worst_upper = worst_upper.max(hi - bound);
        log.push(n, h as u64, "upper_tail_margin", bound - hi);
    }
    checks.push(Check::pass_if(
        "upper-tail-bound",
        worst_upper <= 0.0,
        worst_upper,
        "max Wilson-upper excess over 10 exp(-h/4), h in {1..4}".to_string(),
    ));

    // Lower tail P(g <= h) <= 5 h^{2/3} sqrt(log 1/h).
    let mut worst_lower = f64::NEG_INFINITY;
    for h in [0.1, 0.05, 0.02] {
        let hits = singles.iter().filter(|&&g| g <= h).count();
        let (_, hi) = wilson_interval(hits, trials);
        let bound = 5.0 * h.powf(2.0 / 3.0) * (1.0 / h).ln().sqrt();
        worst_lower = worst_lower.max(hi - bound);
    }
    checks.push(Check::pass_if(
        "lower-tail-bound",
        worst_lower <= 0.0,
        worst_lower,
        "max Wilson-upper excess over 5 h^{2/3} sqrt(log 1/h), h in {0.1, 0.05, 0.02}".to_string(),
    ));

    let mu = mean(&singles);
    let se = stderr_mean(&singles);
    checks.push(
        Check::pass_if(
            "mean-gap",
            (mu - 1.0).abs() < config.tol("gap_mean", 0.02),
            mu,
            format!("{trials} trials at N = {n}"),
        )
        .with_interval(mu - 2.0 * se, mu + 2.0 * se),
    );

    // Optional extra indices relative to N/2, reported for inspection.
    for (which, &offset) in config.index_offsets.iter().enumerate() {
        let i = in_bulk(i0.checked_add_signed(offset as isize).unwrap_or(0))?;
        let extra = run_trials(config.workers, config.trials, |t| {
            let tri = sample_tridiagonal_gue(n, &mut trial_rng(seed, phase(16 + which as u64) + t));
            let pair = tri.eigenvalues_in_index_range(i - 1, i + 1);
            normalized_gap(n, i, pair[0], pair[1])
        })?;
        for (t, &g) in extra.iter().enumerate() {
            log.push(n, t as u64, &format!("gap_offset_{offset}"), g);
        }
        checks.push(Check::report(
            &format!("mean-gap-offset-{offset}"),
            mean(&extra),
            format!("index N/2{offset:+} over {} trials", extra.len()),
        ));
    }

    // Phase 2: moment scaling in N. E g^p should be N-independent; fit the
    // log-log slope across a dyadic ladder around the configured size.
    let ladder = [n / 2, n, 2 * n];
    let scaling_trials = config.trials.min(8000);
    let mut log_moments = vec![Vec::new(); 3]; // p = 1, 2, 4
    for (which, &nn) in ladder.iter().enumerate() {
        let ii = nn / 2;
        let gaps_n = run_trials(config.workers, scaling_trials, |t| {
            let tri = sample_tridiagonal_gue(nn, &mut trial_rng(seed, phase(1 + which as u64) + t));
            let pair = tri.eigenvalues_in_index_range(ii - 1, ii + 1);
            normalized_gap(nn, ii, pair[0], pair[1])
        })?;
        for (t, &g) in gaps_n.iter().enumerate() {
            log.push(nn, t as u64, "gap_scaling", g);
        }
        for (slot, p) in [1.0, 2.0, 4.0].into_iter().enumerate() {
            let m = mean(&gaps_n.iter().map(|&g| g.powf(p)).collect::<Vec<_>>());
            log_moments[slot].push(m.ln());
        }
    }
    let xs: Vec<f64> = ladder.iter().map(|&nn| (nn as f64).ln()).collect();
    let mut worst_slope = 0.0f64;
    for (slot, p) in [1, 2, 4].into_iter().enumerate() {
        let s = slope(&xs, &log_moments[slot]);
        log.push(n, p, "moment_slope", s);
        worst_slope = worst_slope.max(s.abs());
    }
    checks.push(Check::pass_if(
        "moment-scaling-slope",
        worst_slope < config.tol("moment_slope", 0.05),
        worst_slope,
        format!("max |d log E g^p / d log N| over p in {{1, 2, 4}}, N in {ladder:?}"),
    ));

    // Phase 3: variance of windowed gap sums S_m = sum_{l<m} g_{i0+l}.
    let window_m = [4usize, 16, 64];
    let m_max = *window_m.iter().max().unwrap();
    if i0 + m_max >= n {
        bail!("N = {n} too small for a window of {m_max} at N/2");
    }
    let window_trials = (config.trials / 4).clamp(1, config.trials);
    let sums = run_trials(config.workers, window_trials, |t| {
        let tri = sample_tridiagonal_gue(n, &mut trial_rng(seed, phase(4) + t));
        let w = tri.eigenvalues_in_index_range(i0 - 1, i0 + m_max);
        window_m.map(|m| {
            (0..m).map(|l| normalized_gap(n, i0 + l, w[l], w[l + 1])).sum::<f64>()
        })
    })?;
    let mut var_m = Vec::new();
    for (slot, &m) in window_m.iter().enumerate() {
        let vals: Vec<f64> = sums.iter().map(|row| row[slot]).collect();
        for (t, &v) in vals.iter().enumerate() {
            log.push(n, t as u64, &format!("sum_{m}"), v);
        }
        var_m.push(variance(&vals));
    }
    let ratio = var_m[2] / var_m[0];
    checks.push(Check::pass_if(
        "window-variance-ratio",
        ratio < 16.0,
        ratio,
        format!("Var S_64 / Var S_4 over {window_trials} trials; linear growth would give 16"),
    ));
    // Calibrate C at m = 4 and require Var S_m <= C log^{7/3}(2 + m) above.
    let c = var_m[0] / (2.0f64 + 4.0).ln().powf(7.0 / 3.0);
    let mut worst_excess = f64::NEG_INFINITY;
    for (slot, &m) in window_m.iter().enumerate().skip(1) {
        let bound = c * (2.0 + m as f64).ln().powf(7.0 / 3.0);
        worst_excess = worst_excess.max(var_m[slot] - bound);
    }
    checks.push(Check::pass_if(
        "window-variance-log-bound",
        worst_excess <= 0.0,
        worst_excess,
        format!("C = {c:.4} calibrated at m = 4; max excess over C log^(7/3)(2+m)"),
    ));

    Ok((checks, log))
}

/// Local index in a windowed two-level sample for the 0-based top index.
fn local(top_range: (usize, usize), idx: usize) -> usize {
    assert!((top_range.0..top_range.1).contains(&idx));
    idx - top_range.0
}

/// Bulk universality across the index: gap and interlacing-gap moments at
/// i = 0.45 N against i = 0.55 N, plus the strict interlacing law.
pub fn universality(config: &ExperimentConfig) -> Result<(Vec<Check>, CsvLog)> {
    let mut log = CsvLog::new("universality");
    let mut checks = Vec::new();
    let n = config.n[0];
    let i_a = (0.45 * n as f64).round() as usize;
    let i_b = (0.55 * n as f64).round() as usize;
    let window = (i_a - 1, i_b + 1);
    let seed = config.seed;

    let rows = run_trials(config.workers, config.trials, |t| -> Result<[f64; 4]> {
        let s = sample_two_level(n, &mut trial_rng(seed, t), Some(window))?;
        let mut out = [0.0; 4];
        for (slot, i) in [i_a, i_b].into_iter().enumerate() {
            let lam = s.top[local(s.top_range, i - 1)];
            let lam_next = s.top[local(s.top_range, i)];
            out[2 * slot] = normalized_gap(n, i, lam, lam_next);
            out[2 * slot + 1] = interlacing_gap(n, i, lam, s.minor[i - 1]);
        }
        Ok(out)
    })?;
    let mut interlaced = 0usize;
    let mut cols = vec![Vec::with_capacity(rows.len()); 4];
    for (t, row) in rows.iter().enumerate() {
        let row = row.as_ref().map_err(|e| anyhow::anyhow!("trial {t}: {e}"))?;
        let &[ga, gta, gb, gtb] = row;
        log.push_trial(
            n,
            t as u64,
            &[
                ("gap_a".to_string(), ga),
                ("igap_a".to_string(), gta),
                ("gap_b".to_string(), gb),
                ("igap_b".to_string(), gtb),
            ],
        );
        if 0.0 < gta && gta < ga && 0.0 < gtb && gtb < gb {
            interlaced += 1;
        }
        for (c, &v) in cols.iter_mut().zip(row) {
            c.push(v);
        }
    }
    let trials = rows.len();
    checks.push(Check::pass_if(
        "strict-interlacing",
        interlaced == trials,
        interlaced as f64 / trials as f64,
        format!("0 < g~ < g at both indices in {interlaced}/{trials} trials"),
    ));

    // Moment functionals compared across the two bulk indices.
    let functionals: [(&str, fn(f64, f64) -> f64); 4] = [
        ("gap-mean", |g, _| g),
        ("gap-second-moment", |g, _| g * g),
        ("igap-mean", |_, gt| gt),
        ("igap-capped-mean", |_, gt| gt.min(2.0)),
    ];
    for (name, f) in functionals {
        let a: Vec<f64> = cols[0].iter().zip(&cols[1]).map(|(&g, &gt)| f(g, gt)).collect();
        let b: Vec<f64> = cols[2].iter().zip(&cols[3]).map(|(&g, &gt)| f(g, gt)).collect();
        let diff = mean(&a) - mean(&b);
        let se = stderr_mean(&a).hypot(stderr_mean(&b));
        let tol = config.tol("universality", 0.05).max(4.0 * se);
        checks.push(
            Check::pass_if(
                name,
                diff.abs() < tol,
                diff,
                format!("i = {i_a} vs i = {i_b} at N = {n}, threshold {tol:.4}"),
            )
            .with_interval(diff - 2.0 * se, diff + 2.0 * se),
        );
    }

    Ok((checks, log))
}

/// Variance growth of interlacing-gap sums over a window, with the
/// cancellation contrast between constant and alternating coefficients.
pub fn interlacing_variance(config: &ExperimentConfig) -> Result<(Vec<Check>, CsvLog)> {
    let mut log = CsvLog::new("interlacing-variance");
    let mut checks = Vec::new();
    let n = config.n[0];
    let i0 = n / 2;
    let window_m = [8usize, 32, 64];
    let m_max = *window_m.iter().max().unwrap();
    if i0 + m_max >= n {
        bail!("N = {n} too small for a window of {m_max} at N/2");
    }
    let window = (i0, i0 + m_max);
    let seed = config.seed;

    // A fixed random unit coefficient profile, drawn once from the seed.
    let profile: Vec<f64> = {
        let mut rng = trial_rng(seed, phase(9));
        let raw: Vec<f64> = (0..m_max).map(|_| rng.gen::<f64>() - 0.5).collect();
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        raw.iter().map(|v| v / norm).collect()
    };

    let rows = run_trials(config.workers, config.trials, |t| -> Result<Vec<f64>> {
        let s = sample_two_level(n, &mut trial_rng(seed, t), Some(window))?;
        // g~_i for 1-based i = i0+1 ..= i0+m_max.
        Ok((0..m_max)
            .map(|l| {
                let i = i0 + 1 + l;
                interlacing_gap(n, i, s.top[local(s.top_range, i - 1)], s.minor[i - 1])
            })
            .collect())
    })?;
    let trials = rows.len();
    let mut sums = vec![Vec::with_capacity(trials); window_m.len()];
    let mut alternating = Vec::with_capacity(trials);
    let mut profiled = Vec::with_capacity(trials);
    let mut max_single_var = vec![Vec::with_capacity(trials); m_max];
    let mut all_positive = true;
    for (t, row) in rows.iter().enumerate() {
        let gt = row.as_ref().map_err(|e| anyhow::anyhow!("trial {t}: {e}"))?;
        all_positive &= gt.iter().all(|&v| v > 0.0);
        for (slot, &m) in window_m.iter().enumerate() {
            let s: f64 = gt[..m].iter().sum();
            sums[slot].push(s);
            log.push(n, t as u64, &format!("isum_{m}"), s);
        }
        alternating.push(
            gt.iter().enumerate().map(|(l, &v)| if l % 2 == 0 { v } else { -v }).sum(),
        );
        profiled.push(profile.iter().zip(gt).map(|(&a, &v)| a * v).sum());
        for (l, &v) in gt.iter().enumerate() {
            max_single_var[l].push(v);
        }
    }
    checks.push(Check::pass_if(
        "positive-interlacing-gaps",
        all_positive,
        if all_positive { 1.0 } else { 0.0 },
        format!("all {m_max} window gaps positive in every trial"),
    ));

    let var_m: Vec<f64> = sums.iter().map(|v| variance(v)).collect();
    let xs: Vec<f64> = window_m.iter().map(|&m| (m as f64).ln()).collect();
    let ys: Vec<f64> = var_m.iter().map(|&v| v.ln()).collect();
    let growth = slope(&xs, &ys);
    checks.push(Check::pass_if(
        "variance-growth-slope",
        growth < config.tol("ivar_slope", 1.9),
        growth,
        format!("d log Var / d log m over m in {window_m:?}; independence would give 1"),
    ));

    let var_alt = variance(&alternating);
    let cancel = var_alt / var_m[window_m.len() - 1];
    checks.push(Check::pass_if(
        "alternating-cancellation",
        cancel < config.tol("ivar_cancel", 0.5),
        cancel,
        format!("Var(alternating) / Var(constant) at m = {m_max} over {trials} trials"),
    ));

    // Report: a random unit profile against the crude worst-case bound
    // m * max_l Var(g~_l) that ignores all cancellation.
    let worst_single = max_single_var.iter().map(|v| variance(v)).fold(0.0f64, f64::max);
    let ceiling = m_max as f64 * worst_single;
    checks.push(Check::report(
        "random-profile-variance",
        variance(&profiled),
        format!("unit-coefficient profile; crude ceiling m max Var(g~) = {ceiling:.4}"),
    ));

    Ok((checks, log))
}
