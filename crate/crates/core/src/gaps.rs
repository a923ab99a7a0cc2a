//! Fixed-index gap statistics: normalized gaps, interlacing gaps, counting
//! functions in the local bulk coordinate, and the small statistical
//! helpers (Wilson intervals, histograms) used by the experiment drivers.
//!
//! Indices are 1-based as in `lambda_1 < ... < lambda_N`; slice positions
//! are index minus one.

use thiserror::Error;

use crate::semicircle::{self, BulkScaling};

/// Bulk window parameter shared by all experiments.
pub const DEFAULT_DELTA: f64 = 0.2;

#[derive(Debug, Error)]
pub enum GapError {
    #[error("index {i} outside the bulk window [{lo}, {hi}] (N = {n})")]
    OutsideBulk { i: usize, lo: usize, hi: usize, n: usize },
    #[error("non-positive gap at index {0}")]
    NonPositiveGap(usize),
    #[error("interlacing gap violation at index {0}: need 0 < g~ < g")]
    InterlacingGap(usize),
    #[error("spectra have inconsistent lengths")]
    LengthMismatch,
}

/// Local density scale `sqrt(N/2) rho_sc(gamma_{i/N})` turning raw spacings
/// into unit-mean gaps.
pub fn gap_scale(n: usize, i: usize) -> f64 {
    let gamma = semicircle::classical_location(i as f64 / n as f64);
    (n as f64 / 2.0).sqrt() * semicircle::rho_sc(gamma)
}

/// The 1-based indices `i` admissible for gap statistics: both `i` and
/// `i+1` stay within `[delta N, (1-delta) N]`.
pub fn bulk_range(n: usize, delta: f64) -> (usize, usize) {
    assert!((0.0..0.5).contains(&delta));
    let lo = (delta * n as f64).ceil() as usize;
    let hi = ((1.0 - delta) * n as f64).floor() as usize;
    (lo.max(1), hi.saturating_sub(1).min(n - 1))
}

fn check_bulk(n: usize, delta: f64, i: usize) -> Result<(), GapError> {
    let (lo, hi) = bulk_range(n, delta);
    if i < lo || i > hi {
        return Err(GapError::OutsideBulk { i, lo, hi, n });
    }
    Ok(())
}

/// `g_i = sqrt(N/2) rho_sc(gamma_{i/N}) (lambda_{i+1} - lambda_i)` from the
/// two consecutive eigenvalues.
pub fn normalized_gap(n: usize, i: usize, lam_i: f64, lam_next: f64) -> f64 {
    gap_scale(n, i) * (lam_next - lam_i)
}

/// `g~_i = sqrt(N/2) rho_sc(gamma_{i/N}) (lambda'_i - lambda_i)` from the
/// eigenvalue and the minor eigenvalue nested above it.
pub fn interlacing_gap(n: usize, i: usize, lam_i: f64, minor_i: f64) -> f64 {
    gap_scale(n, i) * (minor_i - lam_i)
}

/// Normalized gaps `g_i` for 1-based `i` in `i_lo..=i_hi`, with the bulk
/// precondition enforced at `delta`.
pub fn normalized_gaps(
    eigs: &[f64],
    i_lo: usize,
    i_hi: usize,
    delta: f64,
) -> Result<Vec<f64>, GapError> {
    let n = eigs.len();
    assert!(i_lo >= 1 && i_lo <= i_hi && i_hi < n);
    check_bulk(n, delta, i_lo)?;
    check_bulk(n, delta, i_hi)?;
    (i_lo..=i_hi)
        .map(|i| {
            let g = normalized_gap(n, i, eigs[i - 1], eigs[i]);
            if g <= 0.0 {
                Err(GapError::NonPositiveGap(i))
            } else {
                Ok(g)
            }
        })
        .collect()
}

/// Paired `(g_i, g~_i)` from the full spectrum and the `(N-1)`-minor
/// spectrum, enforcing `0 < g~_i < g_i` per trial.
pub fn interlacing_gaps(
    top: &[f64],
    minor: &[f64],
    i_lo: usize,
    i_hi: usize,
    delta: f64,
) -> Result<Vec<(f64, f64)>, GapError> {
    let n = top.len();
    if minor.len() + 1 != n {
        return Err(GapError::LengthMismatch);
    }
    assert!(i_lo >= 1 && i_lo <= i_hi && i_hi < n);
    check_bulk(n, delta, i_lo)?;
    check_bulk(n, delta, i_hi)?;
    (i_lo..=i_hi)
        .map(|i| {
            let g = normalized_gap(n, i, top[i - 1], top[i]);
            let gt = interlacing_gap(n, i, top[i - 1], minor[i - 1]);
            if !(0.0 < gt && gt < g) {
                Err(GapError::InterlacingGap(i))
            } else {
                Ok((g, gt))
            }
        })
        .collect()
}

/// `N_{x,t}`: eigenvalues at or above the local coordinate `t` around bulk
/// energy `x`.
pub fn counting_above(eigs: &[f64], n: usize, x: f64, t: f64) -> usize {
    let f = BulkScaling::new(n, x).to_physical(t);
    eigs.iter().filter(|&&l| l >= f).count()
}

/// `N_{x,t,h} = N_{x,t} - N_{x,t+h}`: eigenvalues in `[f_x(t), f_x(t+h))`.
pub fn counting_statistic(eigs: &[f64], n: usize, x: f64, t: f64, h: f64) -> usize {
    assert!(h >= 0.0);
    counting_above(eigs, n, x, t) - counting_above(eigs, n, x, t + h)
}

/// Windowed gap sum with the scale frozen at the left index (the
/// telescoping form of the counting argument): equals
/// `gap_scale(n,i) * (lambda_{i+m} - lambda_i)` identically.
pub fn windowed_gap_sum(eigs: &[f64], i: usize, m: usize) -> f64 {
    let n = eigs.len();
    assert!(i >= 1 && i + m <= n);
    let s = gap_scale(n, i);
    (0..m).map(|l| s * (eigs[i + l] - eigs[i + l - 1])).sum()
}

/// Rigidity deviation `|lambda_i - sqrt(2N) gamma_{i/N}|`.
pub fn rigidity_deviation(n: usize, i: usize, lam_i: f64) -> f64 {
    let gamma = semicircle::classical_location(i as f64 / n as f64);
    (lam_i - (2.0 * n as f64).sqrt() * gamma).abs()
}

/// 95% Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    assert!(trials > 0 && successes <= trials);
    let z = 1.959_963_984_540_054; // Phi^{-1}(0.975)
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Equal-width histogram normalized to a probability density.
#[derive(Debug, Clone)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub density: Vec<f64>,
    pub total_count: usize,
    pub in_range_count: usize,
}

pub fn gap_histogram(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Histogram {
    assert!(bins >= 1 && hi > lo);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    let mut in_range = 0usize;
    for &s in samples {
        if s >= lo && s < hi {
            counts[((s - lo) / width) as usize] += 1;
            in_range += 1;
        }
    }
    // Density normalized by the full sample count so tail mass outside the
    // range is honestly missing rather than redistributed.
    let norm = samples.len() as f64 * width;
    Histogram {
        lo,
        hi,
        density: counts.iter().map(|&c| c as f64 / norm).collect(),
        total_count: samples.len(),
        in_range_count: in_range,
    }
}
