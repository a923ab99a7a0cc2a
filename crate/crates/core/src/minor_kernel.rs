//! The two-row minor-process kernel: cutoff `eta`, constant `alpha`,
//! coefficients `a_{j,k} = int eta phi_j phi_k`, the first-moment and
//! variance expressions of the linear statistic `int_0^m F`, and the four
//! kernel blocks (the `(N, N-1)` block only as a truncated diagnostic).

use rayon::prelude::*;
use thiserror::Error;

use crate::hermite;
use crate::quadrature::{self, Rule};
use crate::semicircle::{self, BulkScaling};

#[derive(Debug, Error)]
pub enum MinorKernelError {
    #[error("quadrature gate: doubling nodes moved a value by {0:e}")]
    QuadratureGate(f64),
    #[error("a_{{j,k}} methods disagree at ({j},{k}): {direct} vs {wronskian}")]
    MethodDisagreement { j: usize, k: usize, direct: f64, wronskian: f64 },
    #[error("variance truncation: halving the cutoff moved (div) by {change:e} (> 1% of {value:e})")]
    TruncationBudget { change: f64, value: f64 },
}

/// The continuous piecewise-linear cutoff
/// `eta(x) = (1 - sqrt(N/2) rho_sc(gamma_{i/N}) (x - sqrt(2N) gamma_{i/N})_+ / m)_+`.
#[derive(Debug, Clone, Copy)]
pub struct CutoffEta {
    pub n: usize,
    pub i: usize,
    pub m: usize,
    /// Left kink `sqrt(2N) gamma_{i/N}`.
    pub edge: f64,
    /// `sqrt(N/2) rho_sc(gamma_{i/N}) / m`, the magnitude of the slope.
    pub slope: f64,
}

impl CutoffEta {
    pub fn new(i: usize, n: usize, m: usize) -> Self {
        assert!(m >= 1 && i >= 1 && i < n);
        let gamma = semicircle::classical_location(i as f64 / n as f64);
        let rho = semicircle::rho_sc(gamma);
        assert!(rho > 0.0, "index must be in the bulk");
        CutoffEta {
            n,
            i,
            m,
            edge: (2.0 * n as f64).sqrt() * gamma,
            slope: (n as f64 / 2.0).sqrt() * rho / m as f64,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (1.0 - self.slope * (x - self.edge).max(0.0)).max(0.0)
    }

    /// Right kink, where `eta` reaches zero.
    pub fn support_end(&self) -> f64 {
        self.edge + 1.0 / self.slope
    }
}

pub fn eval_eta(x: f64, i: usize, n: usize, m: usize) -> f64 {
    CutoffEta::new(i, n, m).eval(x)
}

fn phi_domain(max_degree: usize) -> (f64, f64) {
    let e = (2.0 * (max_degree as f64 + 1.0)).sqrt() + 3.0;
    (-e, e)
}

fn oscillation_rule(max_degree: usize, a: f64, b: f64, density_mult: f64) -> Rule {
    // phi_k^2-type integrands oscillate at wavelength pi / sqrt(2k); 16
    // nodes per half wavelength is comfortable for 16-point panels.
    let per_unit = density_mult * 32.0 * (2.0 * (max_degree as f64 + 1.0)).sqrt()
        / std::f64::consts::PI;
    quadrature::panel_rule(a, b, (16.0 / per_unit).min(b - a), 16)
}

/// `alpha = int_{-inf}^{E} phi_{N-1}^2` with `E = sqrt(2N) gamma_{i/N}`
/// (the dimensionally consistent reading of the paper's endpoint); the
/// literal endpoint `gamma_{i/N}` is available behind the flag.
pub fn alpha_constant(i: usize, n: usize, literal_endpoint: bool) -> Result<f64, MinorKernelError> {
    assert!(i >= 1 && i < n);
    let gamma = semicircle::classical_location(i as f64 / n as f64);
    let endpoint = if literal_endpoint { gamma } else { (2.0 * n as f64).sqrt() * gamma };
    let (lo, _) = phi_domain(n - 1);
    let integral = |mult: f64| -> f64 {
        let rule = oscillation_rule(n - 1, lo, endpoint, mult);
        rule.integrate(|x| {
            let p = hermite::phi(n - 1, x);
            p * p
        })
    };
    let coarse = integral(1.0);
    let fine = integral(2.0);
    if (coarse - fine).abs() > 1e-8 {
        return Err(MinorKernelError::QuadratureGate((coarse - fine).abs()));
    }
    Ok(fine)
}

/// Tabulated `a_{j,k}` for `j_lo <= j <= j_hi < N <= ... k_hi`, by both the
/// direct quadrature and the Wronskian boundary form.
#[derive(Debug, Clone)]
pub struct AjkTable {
    pub eta: CutoffEta,
    pub j_lo: usize,
    pub j_hi: usize,
    pub k_lo: usize,
    pub k_hi: usize,
    /// Row-major `(j_hi-j_lo+1) x (k_hi-k_lo+1)`, direct quadrature values.
    pub direct: Vec<f64>,
    /// Same layout, Wronskian-route values (`NaN` on the diagonal `j = k`,
    /// where that route is undefined).
    pub wronskian: Vec<f64>,
}

impl AjkTable {
    pub fn get(&self, j: usize, k: usize) -> f64 {
        assert!(j >= self.j_lo && j <= self.j_hi && k >= self.k_lo && k <= self.k_hi);
        self.direct[(j - self.j_lo) * (self.k_hi - self.k_lo + 1) + (k - self.k_lo)]
    }

    pub fn get_wronskian(&self, j: usize, k: usize) -> f64 {
        assert!(j >= self.j_lo && j <= self.j_hi && k >= self.k_lo && k <= self.k_hi);
        self.wronskian[(j - self.j_lo) * (self.k_hi - self.k_lo + 1) + (k - self.k_lo)]
    }

    /// CSV dump: `j,k,a_direct,a_wronskian`.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "j,k,a_direct,a_wronskian")?;
        for j in self.j_lo..=self.j_hi {
            for k in self.k_lo..=self.k_hi {
                writeln!(w, "{j},{k},{},{}", self.get(j, k), self.get_wronskian(j, k))?;
            }
        }
        Ok(())
    }
}

/// Quadrature over the support of `eta` (plus the left tail where
/// `eta = 1`), with panels split at the kink so each piece is smooth.
fn eta_rule(eta: &CutoffEta, deg: usize, density_mult: f64) -> Rule {
    let (lo, hi) = phi_domain(deg);
    let cut1 = eta.edge.clamp(lo, hi);
    let cut2 = eta.support_end().clamp(lo, hi);
    let mut rule = Rule { nodes: Vec::new(), weights: Vec::new() };
    for (a, b) in [(lo, cut1), (cut1, cut2)] {
        if b > a + 1e-12 {
            let piece = oscillation_rule(deg, a, b, density_mult);
            rule.nodes.extend(piece.nodes);
            rule.weights.extend(piece.weights);
        }
    }
    rule
}

/// Quadrature over the support of `eta'` (the ramp between the kinks).
fn ramp_rule(eta: &CutoffEta, deg: usize, density_mult: f64) -> Rule {
    oscillation_rule(deg, eta.edge, eta.support_end(), density_mult)
}

/// Compute the table on `j_lo..=j_hi` times `k_lo..=k_hi`, enforcing the
/// dual-method agreement at `1e-8` absolute off the diagonal.
pub fn compute_ajk(
    i: usize,
    n: usize,
    m: usize,
    j_range: (usize, usize),
    k_range: (usize, usize),
) -> Result<AjkTable, MinorKernelError> {
    let (j_lo, j_hi) = j_range;
    let (k_lo, k_hi) = k_range;
    assert!(j_lo <= j_hi && j_hi < n && k_lo <= k_hi && k_lo + 1 >= n);
    let eta = CutoffEta::new(i, n, m);
    let deg = k_hi;
    let build = |mult: f64| -> (Vec<f64>, Vec<f64>) {
        let direct = ajk_direct(&eta, &eta_rule(&eta, deg, mult), j_lo, j_hi, k_lo, k_hi);
        let wronskian = ajk_wronskian(&eta, &ramp_rule(&eta, deg, mult), j_lo, j_hi, k_lo, k_hi);
        (direct, wronskian)
    };
    let (coarse, coarse_w) = build(1.0);
    let (direct, wronskian) = build(2.0);
    let mut gate = 0.0f64;
    for (a, b) in coarse.iter().zip(&direct) {
        gate = gate.max((a - b).abs());
    }
    for (a, b) in coarse_w.iter().zip(&wronskian) {
        if a.is_finite() {
            gate = gate.max((a - b).abs());
        }
    }
    if gate > 1e-10 {
        return Err(MinorKernelError::QuadratureGate(gate));
    }
    for (idx, (&d, &w)) in direct.iter().zip(&wronskian).enumerate() {
        if w.is_nan() {
            continue;
        }
        if (d - w).abs() > 1e-8 {
            let j = j_lo + idx / (k_hi - k_lo + 1);
            let k = k_lo + idx % (k_hi - k_lo + 1);
            return Err(MinorKernelError::MethodDisagreement { j, k, direct: d, wronskian: w });
        }
    }
    Ok(AjkTable { eta, j_lo, j_hi, k_lo, k_hi, direct, wronskian })
}

/// Direct quadrature `int eta phi_j phi_k` for the whole rectangle,
/// streamed node by node (rank-one updates keep the inner loop contiguous
/// and avoid materializing the full Hermite table).
fn ajk_direct(
    eta: &CutoffEta,
    rule: &Rule,
    j_lo: usize,
    j_hi: usize,
    k_lo: usize,
    k_hi: usize,
) -> Vec<f64> {
    let k_count = k_hi - k_lo + 1;
    let j_count = j_hi - j_lo + 1;
    let chunk = 512usize;
    let idx: Vec<usize> = (0..rule.len()).collect();
    idx.par_chunks(chunk)
        .map(|ts| {
            let mut acc = vec![0.0f64; j_count * k_count];
            for &t in ts {
                let x = rule.nodes[t];
                let ew = rule.weights[t] * eta.eval(x);
                if ew == 0.0 {
                    continue;
                }
                let p = hermite::phi_all(k_hi, x);
                let ks = &p[k_lo..=k_hi];
                for (row, &pj) in acc.chunks_mut(k_count).zip(&p[j_lo..=j_hi]) {
                    let c = ew * pj;
                    for (r, &pk) in row.iter_mut().zip(ks) {
                        *r += c * pk;
                    }
                }
            }
            acc
        })
        .reduce(
            || vec![0.0f64; j_count * k_count],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += y;
                }
                a
            },
        )
}

/// Wronskian route `a_{j,k} = -1/(2(j-k)) int eta' (phi_j phi_k' - phi_j' phi_k)`
/// for the rectangle, with derivatives from the lowering identity; only the
/// ramp of `eta'` contributes.  Diagonal entries come out as `NaN`.
fn ajk_wronskian(
    eta: &CutoffEta,
    rule: &Rule,
    j_lo: usize,
    j_hi: usize,
    k_lo: usize,
    k_hi: usize,
) -> Vec<f64> {
    let nodes = rule.len();
    let stride = k_hi + 1;
    let phi: Vec<f64> = rule
        .nodes
        .par_iter()
        .flat_map_iter(|&x| hermite::phi_all(k_hi, x))
        .collect();
    let k_count = k_hi - k_lo + 1;
    let mut out = vec![f64::NAN; (j_hi - j_lo + 1) * k_count];
    out.par_chunks_mut(k_count).enumerate().for_each(|(j_off, row)| {
        let j = j_lo + j_off;
        for (k_off, k) in (k_lo..=k_hi).enumerate() {
            if j == k {
                continue;
            }
            let mut wacc = 0.0;
            for t in 0..nodes {
                let x = rule.nodes[t];
                let pj = phi[t * stride + j];
                let pk = phi[t * stride + k];
                let dj = if j == 0 {
                    -x * pj
                } else {
                    (2.0 * j as f64).sqrt() * phi[t * stride + j - 1] - x * pj
                };
                let dk = (2.0 * k as f64).sqrt() * phi[t * stride + k - 1] - x * pk;
                wacc += rule.weights[t] * (pj * dk - dj * pk);
            }
            row[k_off] = eta.slope * wacc / (2.0 * (j as f64 - k as f64));
        }
    });
    out
}

/// First moment of `int_0^m F`: `m (int eta phi_{N-1}^2 - alpha)`.
pub fn first_moment(i: usize, n: usize, m: usize) -> Result<f64, MinorKernelError> {
    let eta = CutoffEta::new(i, n, m);
    let integral = |mult: f64| -> f64 {
        eta_rule(&eta, n - 1, mult).integrate(|x| {
            let p = hermite::phi(n - 1, x);
            eta.eval(x) * p * p
        })
    };
    let coarse = integral(1.0);
    let fine = integral(2.0);
    if (coarse - fine).abs() > 1e-8 {
        return Err(MinorKernelError::QuadratureGate((coarse - fine).abs()));
    }
    let alpha = alpha_constant(i, n, false)?;
    Ok(m as f64 * (fine - alpha))
}

/// The variance expression: value of (the three sums of) the determinantal
/// variance of `(1/m) int_0^m F`, its truncation-convergence change, the
/// final `|j-k|` cutoff, and the dual-method table of the base region.
#[derive(Debug)]
pub struct VarianceFormula {
    pub value: f64,
    /// `|value(D) - value(D/2)|` under halving the final `|j-k|` cutoff.
    pub truncation_change: f64,
    /// Final cutoff `D` accepted by the 1% doubling gate.
    pub cutoff: usize,
    pub table: AjkTable,
}

/// Coefficients on a rectangle `j_lo..=N-1` times `N-1..=k_hi`, dual-method
/// on the base cutoff and extended outward by the Wronskian route alone
/// (the direct quadrature cost grows with the full oscillatory support of
/// `phi_k` while the Wronskian form only sees the ramp of `eta'`).
struct ExtendedA {
    n: usize,
    j_lo: usize,
    k_hi: usize,
    /// Row-major `(n - j_lo) x (k_hi - n + 2)`.
    a: Vec<f64>,
}

impl ExtendedA {
    fn get(&self, j: usize, k: usize) -> f64 {
        self.a[(j - self.j_lo) * (self.k_hi - self.n + 2) + (k - (self.n - 1))]
    }
}

/// Evaluate the variance expression, growing the `|j-k|` cutoff from the
/// tabulation default `max(200, 20m)` until doubling it moves the value by
/// less than 1%.
pub fn variance_formula(i: usize, n: usize, m: usize) -> Result<VarianceFormula, MinorKernelError> {
    let base = 200.max(20 * m);
    let table = compute_ajk(
        i,
        n,
        m,
        ((n - 1).saturating_sub(base), n - 1),
        (n - 1, n - 1 + base),
    )?;
    let mut ext = ExtendedA {
        n,
        j_lo: table.j_lo,
        k_hi: table.k_hi,
        a: table.direct.clone(),
    };
    let mut cutoff = base;
    loop {
        let value = variance_sums(&ext, n, cutoff);
        let half = variance_sums(&ext, n, cutoff / 2);
        let change = (value - half).abs();
        if change <= 0.01 * value.abs().max(1e-12) {
            return Ok(VarianceFormula { value, truncation_change: change, cutoff, table });
        }
        if cutoff >= 8 * base {
            return Err(MinorKernelError::TruncationBudget { change, value });
        }
        cutoff *= 2;
        extend_wronskian(&table.eta, &mut ext, cutoff)?;
    }
}

/// Grow the rectangle to cutoff `d` on both sides, filling the new cells
/// with gated Wronskian quadrature.
fn extend_wronskian(
    eta: &CutoffEta,
    ext: &mut ExtendedA,
    d: usize,
) -> Result<(), MinorKernelError> {
    let n = ext.n;
    let new_j_lo = (n - 1).saturating_sub(d);
    let new_k_hi = n - 1 + d;
    let cols = new_k_hi - n + 2;
    let mut a = vec![0.0f64; (n - new_j_lo) * cols];
    for j in new_j_lo..n {
        for k in (n - 1)..=new_k_hi {
            if j >= ext.j_lo && k <= ext.k_hi {
                a[(j - new_j_lo) * cols + (k - (n - 1))] = ext.get(j, k);
            }
        }
    }
    // Two fresh strips: new low-j rows over all columns, and old rows over
    // the new high-k columns.
    let mut strips: Vec<(usize, usize, usize, usize)> = Vec::new();
    if new_j_lo < ext.j_lo {
        strips.push((new_j_lo, ext.j_lo - 1, n - 1, new_k_hi));
    }
    if new_k_hi > ext.k_hi {
        strips.push((ext.j_lo, n - 1, ext.k_hi + 1, new_k_hi));
    }
    for (j_lo, j_hi, k_lo, k_hi) in strips {
        let coarse = ajk_wronskian(eta, &ramp_rule(eta, k_hi, 1.0), j_lo, j_hi, k_lo, k_hi);
        let fine = ajk_wronskian(eta, &ramp_rule(eta, k_hi, 2.0), j_lo, j_hi, k_lo, k_hi);
        let mut gate = 0.0f64;
        for (x, y) in coarse.iter().zip(&fine) {
            if x.is_finite() {
                gate = gate.max((x - y).abs());
            }
        }
        if gate > 1e-10 {
            return Err(MinorKernelError::QuadratureGate(gate));
        }
        let strip_cols = k_hi - k_lo + 1;
        for j in j_lo..=j_hi {
            for k in k_lo..=k_hi {
                a[(j - new_j_lo) * cols + (k - (n - 1))] =
                    fine[(j - j_lo) * strip_cols + (k - k_lo)];
            }
        }
    }
    ext.j_lo = new_j_lo;
    ext.k_hi = new_k_hi;
    ext.a = a;
    Ok(())
}

fn variance_sums(ext: &ExtendedA, n: usize, reach: usize) -> f64 {
    let j_min = ext.j_lo.max((n - 1).saturating_sub(reach));
    let k_max = ext.k_hi.min(n - 1 + reach);
    let mut sum = 0.0;
    for j in j_min..n {
        for k in n..=k_max {
            sum += ext.get(j, k).powi(2);
        }
    }
    for j in j_min..(n - 1) {
        for k in (n - 1)..=k_max {
            sum += ext.get(j, k).powi(2);
        }
    }
    for j in j_min.max(1).max(ext.j_lo + 1)..n {
        for k in n..=k_max {
            sum -= 2.0 * (j as f64 / k as f64).sqrt() * ext.get(j, k) * ext.get(j - 1, k - 1);
        }
    }
    sum
}

/// The three sums of the variance expression, restricted to `|j - (N-1)|`
/// and `|k - (N-1)|` at most `reach`.
pub fn variance_from_table(table: &AjkTable, n: usize, reach: usize) -> f64 {
    let j_min = table.j_lo.max((n - 1).saturating_sub(reach));
    let k_max = table.k_hi.min(n - 1 + reach);
    let mut sum = 0.0;
    // First sum: j < N <= k.
    for j in j_min..n {
        for k in n..=k_max {
            sum += table.get(j, k).powi(2);
        }
    }
    // Second sum: j < N-1 <= k.
    for j in j_min..(n - 1) {
        for k in (n - 1)..=k_max {
            sum += table.get(j, k).powi(2);
        }
    }
    // Cross sum: 1 <= j < N <= k, weight sqrt(j/k), paired with (j-1,k-1);
    // the neighbor must itself lie in the table.  The coefficient 2 comes
    // from the -2 Cov term of the variance expansion (the boxed display
    // collecting the three sums drops it, but the covariance line above it
    // and direct Monte Carlo both fix the constant).
    for j in j_min.max(1).max(table.j_lo + 1)..n {
        for k in n..=k_max {
            sum -= 2.0 * (j as f64 / k as f64).sqrt() * table.get(j, k) * table.get(j - 1, k - 1);
        }
    }
    sum
}

/// Per-trial value of `(1/m) int_0^m F` from a sampled `(minor, top)`
/// spectrum pair, by both equivalent routes: the cutoff sums
/// `sum eta(lambda) - sum eta(lambda') - alpha`, and direct interval
/// walking of `F` (the measure of `t in [0,m]` covered by the images of
/// the `[lambda_j, lambda'_j]`). The two agree to rounding.
pub fn f_integral_routes(
    top: &[f64],
    minor: &[f64],
    eta: &CutoffEta,
    alpha: f64,
) -> (f64, f64) {
    let n = top.len();
    assert_eq!(minor.len() + 1, n);
    let eta_route: f64 = top.iter().map(|&l| eta.eval(l)).sum::<f64>()
        - minor.iter().map(|&l| eta.eval(l)).sum::<f64>()
        - alpha;
    // Interval walking in the local coordinate t = f^{-1}(lambda).
    let gamma_frac = eta.i as f64 / eta.n as f64;
    let scaling = BulkScaling::new(eta.n, semicircle::classical_location(gamma_frac));
    let m = eta.m as f64;
    let mut covered = 0.0;
    for j in 0..n - 1 {
        let a = scaling.to_local(top[j]).max(0.0);
        let b = scaling.to_local(minor[j]).min(m);
        if b > a {
            covered += b - a;
        }
    }
    let walk_route = covered / m - alpha;
    (eta_route, walk_route)
}

/// Which block of the two-row kernel to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinorBlock {
    /// `sum_{j<N} phi_j(x) phi_j(y)`.
    NN,
    /// `sum_{j<N-1} phi_j(x) phi_j(y)`.
    N1N1,
    /// `sum_{j=1}^{N-1} sqrt(j) phi_{j-1}(x) phi_j(y)`.
    N1N,
    /// `-sum_{j>=N} phi_j(x) phi_{j-1}(y) / sqrt(j)`, truncated at `N+J`
    /// with Cesaro averaging of the last quarter of partial sums.
    NN1,
}

/// Evaluate a block of the minor-process kernel; `truncation` is the `J`
/// for the infinite `NN1` sum (ignored by the finite blocks).
pub fn eval_minor_block(block: MinorBlock, n: usize, x: f64, y: f64, truncation: usize) -> f64 {
    match block {
        MinorBlock::NN => crate::dpp::eval_cd_kernel(n, x, y),
        MinorBlock::N1N1 => crate::dpp::eval_cd_kernel(n - 1, x, y),
        MinorBlock::N1N => {
            let px = hermite::phi_all(n - 1, x);
            let py = hermite::phi_all(n - 1, y);
            (1..n).map(|j| (j as f64).sqrt() * px[j - 1] * py[j]).sum()
        }
        MinorBlock::NN1 => {
            let top = n + truncation;
            let px = hermite::phi_all(top, x);
            let py = hermite::phi_all(top, y);
            let mut partial = 0.0;
            let cesaro_from = n + 3 * truncation / 4;
            let mut cesaro_sum = 0.0;
            let mut cesaro_count = 0usize;
            for j in n..=top {
                partial -= px[j] * py[j - 1] / (j as f64).sqrt();
                if j >= cesaro_from {
                    cesaro_sum += partial;
                    cesaro_count += 1;
                }
            }
            cesaro_sum / cesaro_count as f64
        }
    }
}

/// Truncation-stability report for the `NN1` block.
#[derive(Debug, Clone, Copy)]
pub struct Nn1Report {
    pub value: f64,
    pub doubled: f64,
    pub change: f64,
    /// False when doubling `J` moved the value by more than `1e-4`; the
    /// series is only conditionally convergent, so this is expected at
    /// generic off-diagonal points (the discarded tail oscillates with
    /// amplitude on the order of `1/(|x-y| sqrt(J))`).
    pub stable: bool,
}

pub fn nn1_stability(n: usize, x: f64, y: f64, truncation: usize) -> Nn1Report {
    let value = eval_minor_block(MinorBlock::NN1, n, x, y, truncation);
    let doubled = eval_minor_block(MinorBlock::NN1, n, x, y, 2 * truncation);
    let change = (value - doubled).abs();
    Nn1Report { value, doubled, change, stable: change <= 1e-4 }
}
