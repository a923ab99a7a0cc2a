//! Determinantal point process machinery: kernel evaluation (Christoffel-
//! Darboux, normalized GUE, sine), Nystrom restriction to an interval,
//! exact projection-mixture sampling, counting-statistic moments, and the
//! restriction diagnostics (variance integrals A, B and the quartic trace).

use rand::Rng;
use thiserror::Error;

use crate::eigen::{self, EigenError, HermitianMatrix};
use crate::hermite;
use crate::quadrature::{self, Rule};

#[derive(Debug, Error)]
pub enum DppError {
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error("occupation probability {0} escapes [0,1] beyond tolerance")]
    MuOutOfRange(f64),
    #[error("Nystrom convergence gate failed: max change {0:e} after doubling")]
    ConvergenceGate(f64),
    #[error("two-route moment mismatch: {quadrature} vs {spectral}")]
    MomentMismatch { quadrature: f64, spectral: f64 },
    #[error("complement truncation tail {tail:e} exceeds 1% of value {value:e}")]
    TailBudget { tail: f64, value: f64 },
}

/// The kernels of interest. `ChristoffelDarboux` lives in the unscaled
/// (physical) spectral variable; `NormalizedGue` is the same kernel in
/// semicircle units, `K^(N)(a,b) = sqrt(2N) K_N(sqrt(2N)a, sqrt(2N)b)`,
/// whose one-point intensity is `N rho_sc`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    ChristoffelDarboux { n: usize },
    NormalizedGue { n: usize },
    Sine,
    Zero,
}

/// `sin(pi(x-y)) / (pi(x-y))` with the removable singularity expanded.
pub fn eval_sine_kernel(x: f64, y: f64) -> f64 {
    let d = std::f64::consts::PI * (x - y);
    if d.abs() < 1e-8 {
        1.0 - d * d / 6.0
    } else {
        d.sin() / d
    }
}

/// `K_N(x,y) = sum_{j<N} phi_j(x) phi_j(y)`, evaluated by the
/// Christoffel-Darboux form away from the diagonal and by the direct sum
/// near it (both cost `O(N)` pointwise; batch evaluation amortizes the
/// Hermite recurrences, see `KernelTable`).
pub fn eval_cd_kernel(n: usize, x: f64, y: f64) -> f64 {
    assert!(n >= 1);
    if (x - y).abs() <= 1e-4 {
        let fx = hermite::phi_all(n - 1, x);
        let fy = hermite::phi_all(n - 1, y);
        fx.iter().zip(&fy).map(|(a, b)| a * b).sum()
    } else {
        let fx = hermite::phi_all(n, x);
        let fy = hermite::phi_all(n, y);
        (n as f64 / 2.0).sqrt() * (fx[n] * fy[n - 1] - fx[n - 1] * fy[n]) / (x - y)
    }
}

/// Diagonal `K_N(x,x)` via the confluent Christoffel-Darboux (Wronskian)
/// form, avoiding the `O(N)` sum.
pub fn eval_cd_diagonal(n: usize, x: f64) -> f64 {
    let f = hermite::phi_all(n, x);
    let d = hermite::phi_derivatives_from(&f, x);
    (n as f64 / 2.0).sqrt() * (d[n] * f[n - 1] - d[n - 1] * f[n])
}

impl Kernel {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match *self {
            Kernel::Sine => eval_sine_kernel(x, y),
            Kernel::ChristoffelDarboux { n } => eval_cd_kernel(n, x, y),
            Kernel::NormalizedGue { n } => {
                let s = (2.0 * n as f64).sqrt();
                s * eval_cd_kernel(n, s * x, s * y)
            }
            Kernel::Zero => 0.0,
        }
    }

    pub fn diagonal(&self, x: f64) -> f64 {
        match *self {
            Kernel::Sine => 1.0,
            Kernel::ChristoffelDarboux { n } => eval_cd_diagonal(n, x),
            Kernel::NormalizedGue { n } => {
                let s = (2.0 * n as f64).sqrt();
                s * eval_cd_diagonal(n, s * x)
            }
            Kernel::Zero => 0.0,
        }
    }

    /// Quadrature density resolving the kernel's oscillation: 16 nodes per
    /// local mean spacing (one "sine unit").
    pub fn nodes_per_unit(&self) -> f64 {
        match *self {
            Kernel::Sine => 16.0,
            // Bulk spacing pi / sqrt(2N) in the physical variable.
            Kernel::ChristoffelDarboux { n } => {
                16.0 * (2.0 * n as f64).sqrt() / std::f64::consts::PI
            }
            // Bulk spacing pi / (2N) in semicircle units (rho_sc(0) = 2/pi).
            Kernel::NormalizedGue { n } => 16.0 * 2.0 * n as f64 / std::f64::consts::PI,
            Kernel::Zero => 16.0,
        }
    }

    /// Where the kernel is numerically negligible: `CD`-type kernels are
    /// supported on the semicircle bulk plus an edge margin; the sine
    /// kernel has none.
    pub fn support_hint(&self) -> Option<(f64, f64)> {
        match *self {
            Kernel::ChristoffelDarboux { n } => {
                let e = (2.0 * n as f64).sqrt() + 2.0;
                Some((-e, e))
            }
            Kernel::NormalizedGue { n } => {
                let e = 1.0 + 2.0 / (2.0 * n as f64).sqrt();
                Some((-e, e))
            }
            _ => None,
        }
    }
}

/// Precomputed kernel values on a fixed node set: `O(1)` per pair after an
/// `O(N q)` setup, which is what makes the big double integrals feasible.
pub struct KernelTable {
    coeff: f64,
    outer: f64,
    xs: Vec<f64>,
    f_hi: Vec<f64>,
    f_lo: Vec<f64>,
    diag: Vec<f64>,
    kind: TableKind,
}

enum TableKind {
    Cd,
    Sine,
    Zero,
}

impl KernelTable {
    pub fn new(kernel: &Kernel, nodes: &[f64]) -> KernelTable {
        match *kernel {
            Kernel::Sine => KernelTable {
                coeff: 0.0,
                outer: 1.0,
                xs: nodes.to_vec(),
                f_hi: Vec::new(),
                f_lo: Vec::new(),
                diag: vec![1.0; nodes.len()],
                kind: TableKind::Sine,
            },
            Kernel::Zero => KernelTable {
                coeff: 0.0,
                outer: 1.0,
                xs: nodes.to_vec(),
                f_hi: Vec::new(),
                f_lo: Vec::new(),
                diag: vec![0.0; nodes.len()],
                kind: TableKind::Zero,
            },
            Kernel::ChristoffelDarboux { n } | Kernel::NormalizedGue { n } => {
                let scale = if matches!(kernel, Kernel::NormalizedGue { .. }) {
                    (2.0 * n as f64).sqrt()
                } else {
                    1.0
                };
                let xs: Vec<f64> = nodes.iter().map(|&x| scale * x).collect();
                let mut f_hi = Vec::with_capacity(xs.len());
                let mut f_lo = Vec::with_capacity(xs.len());
                let mut diag = Vec::with_capacity(xs.len());
                let coeff = (n as f64 / 2.0).sqrt();
                for &x in &xs {
                    let f = hermite::phi_all(n, x);
                    let d = hermite::phi_derivatives_from(&f, x);
                    f_hi.push(f[n]);
                    f_lo.push(f[n - 1]);
                    diag.push(coeff * (d[n] * f[n - 1] - d[n - 1] * f[n]));
                }
                KernelTable { coeff, outer: scale, xs, f_hi, f_lo, diag, kind: TableKind::Cd }
            }
        }
    }

    #[inline]
    pub fn eval(&self, i: usize, j: usize) -> f64 {
        match self.kind {
            TableKind::Zero => 0.0,
            TableKind::Sine => {
                if i == j {
                    1.0
                } else {
                    eval_sine_kernel(self.xs[i], self.xs[j])
                }
            }
            TableKind::Cd => {
                if i == j {
                    return self.outer * self.diag[i];
                }
                let d = self.xs[i] - self.xs[j];
                if d.abs() < 1e-7 {
                    // Wronskian cancellation would dominate; the diagonal
                    // varies smoothly at this scale.
                    return self.outer * 0.5 * (self.diag[i] + self.diag[j]);
                }
                self.outer * self.coeff
                    * (self.f_hi[i] * self.f_lo[j] - self.f_lo[i] * self.f_hi[j])
                    / d
            }
        }
    }

    pub fn diagonal(&self, i: usize) -> f64 {
        self.outer * self.diag[i]
    }
}

/// Panelized Gauss-Legendre grid resolving `kernel` on `[a, b]`.
pub fn kernel_grid(kernel: &Kernel, a: f64, b: f64) -> Rule {
    let per_unit = kernel.nodes_per_unit();
    // 16-point panels sized so the panel carries one "sine unit".
    let panel = 16.0 / per_unit;
    quadrature::panel_rule(a, b, panel, 16)
}

/// A kernel restricted to an interval: occupation probabilities and node
/// eigenfunction data from the symmetric Nystrom eigenproblem of
/// `W^{1/2} K W^{1/2}`.
#[derive(Debug, Clone)]
pub struct RestrictedKernel {
    pub interval: (f64, f64),
    pub rule: Rule,
    /// Occupation probabilities, descending, clamped to `[0,1]`.
    pub mu: Vec<f64>,
    /// Eigenvectors of the weighted matrix, row-major `q x q`; column `r`
    /// matches `mu[r]`. Eigenfunction values are `vec[i*q + r] / sqrt(w_i)`.
    pub vectors: Vec<f64>,
}

impl RestrictedKernel {
    pub fn sum_mu(&self) -> f64 {
        self.mu.iter().sum()
    }

    /// Quadrature trace `int_a^b K(x,x) dx` recomputed from stored data is
    /// not possible without the kernel; callers use `counting_moments`.
    pub fn order(&self) -> usize {
        self.rule.len()
    }
}

/// Restrict `kernel` to `[a, b]` with at least `q` quadrature nodes.
pub fn nystrom_restrict(kernel: &Kernel, a: f64, b: f64, q: usize) -> Result<RestrictedKernel, DppError> {
    assert!(q >= 4 && b > a);
    let panels = q.div_ceil(16).max(1);
    let rule = quadrature::panel_rule(a, b, (b - a) / panels as f64, 16);
    nystrom_restrict_on(kernel, a, b, rule)
}

fn nystrom_restrict_on(kernel: &Kernel, a: f64, b: f64, rule: Rule) -> Result<RestrictedKernel, DppError> {
    let m = rule.len();
    let table = KernelTable::new(kernel, &rule.nodes);
    let sqw: Vec<f64> = rule.weights.iter().map(|w| w.sqrt()).collect();
    let mut h = HermitianMatrix::zeros(m);
    for i in 0..m {
        for j in i..m {
            let v = sqw[i] * sqw[j] * table.eval(i, j);
            h.set(i, j, num_complex::Complex64::new(v, 0.0));
            if i != j {
                h.set(j, i, num_complex::Complex64::new(v, 0.0));
            }
        }
    }
    let eig = eigen::eigen_hermitian(&h, true)?;
    // Descending by eigenvalue; clamp into [0,1].
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&i, &j| eig.values[j].total_cmp(&eig.values[i]));
    let mut mu = Vec::with_capacity(m);
    for &r in &idx {
        let v = eig.values[r];
        if !(-1e-6..=1.0 + 1e-6).contains(&v) {
            return Err(DppError::MuOutOfRange(v));
        }
        mu.push(v.clamp(0.0, 1.0));
    }
    let src = eig.vectors.expect("requested vectors");
    let mut vectors = vec![0.0; m * m];
    for (new_c, &old_c) in idx.iter().enumerate() {
        for row in 0..m {
            vectors[row * m + new_c] = src[row * m + old_c].re;
        }
    }
    Ok(RestrictedKernel { interval: (a, b), rule, mu, vectors })
}

/// Restriction with the convergence gate: the node count doubles until no
/// occupation probability above `1e-6` moves by more than `1e-8`.
pub fn nystrom_restrict_gated(kernel: &Kernel, a: f64, b: f64) -> Result<RestrictedKernel, DppError> {
    let base = ((b - a) * kernel.nodes_per_unit()).ceil() as usize;
    let mut q = base.max(48);
    let mut prev = nystrom_restrict(kernel, a, b, q)?;
    for _ in 0..4 {
        q *= 2;
        let next = nystrom_restrict(kernel, a, b, q)?;
        let mut worst = 0.0f64;
        for (i, &mu) in prev.mu.iter().enumerate() {
            if mu > 1e-6 {
                worst = worst.max((mu - next.mu[i]).abs());
            }
        }
        if worst < 1e-8 {
            return Ok(next);
        }
        prev = next;
    }
    let worst = prev.mu.first().copied().unwrap_or(0.0);
    Err(DppError::ConvergenceGate(worst))
}

/// Counting moments of the restricted process, computed both by quadrature
/// (`mean = int K(x,x)`, `var = mean - iint K^2`) and spectrally
/// (`sum mu`, `sum mu(1-mu)`); the two routes must agree.
pub fn counting_moments(kernel: &Kernel, rk: &RestrictedKernel) -> Result<(f64, f64), DppError> {
    let m = rk.order();
    let table = KernelTable::new(kernel, &rk.rule.nodes);
    let w = &rk.rule.weights;
    let mean_q: f64 = (0..m).map(|i| w[i] * table.diagonal(i)).sum();
    let mut double = 0.0;
    for i in 0..m {
        double += w[i] * w[i] * table.eval(i, i).powi(2);
        for j in (i + 1)..m {
            double += 2.0 * w[i] * w[j] * table.eval(i, j).powi(2);
        }
    }
    let var_q = mean_q - double;
    let mean_s = rk.sum_mu();
    let var_s: f64 = rk.mu.iter().map(|&u| u * (1.0 - u)).sum();
    let tol = |a: f64, b: f64| (a - b).abs() <= 1e-6 * a.abs().max(b.abs()).max(1.0);
    if !tol(mean_q, mean_s) {
        return Err(DppError::MomentMismatch { quadrature: mean_q, spectral: mean_s });
    }
    if !tol(var_q, var_s) {
        return Err(DppError::MomentMismatch { quadrature: var_q, spectral: var_s });
    }
    Ok((mean_q, var_q))
}

/// Sampling-ready data: eigenfunctions Nystrom-extended to a refined
/// uniform grid and re-orthonormalized under the grid measure.
pub struct DppSampler {
    grid: Vec<f64>,
    cell: f64,
    /// Row-major `G x R`; column `r` is the `r`-th kept eigenfunction.
    funcs: Vec<f64>,
    mu: Vec<f64>,
}

/// Build the sampler on a uniform grid `refine` times denser than the
/// Nystrom rule. Eigenfunctions with `mu <= 1e-8` are dropped (their
/// selection probability is negligible and the `1/mu` extension is
/// ill-conditioned there).
pub fn prepare_sampler(kernel: &Kernel, rk: &RestrictedKernel, refine: usize) -> DppSampler {
    let (a, b) = rk.interval;
    let q = rk.order();
    let g = q * refine.max(1);
    let cell = (b - a) / g as f64;
    let grid: Vec<f64> = (0..g).map(|t| a + (t as f64 + 0.5) * cell).collect();
    let kept: Vec<usize> = (0..q).filter(|&r| rk.mu[r] > 1e-8).collect();
    let rsq: Vec<f64> = rk.rule.weights.iter().map(|w| w.sqrt()).collect();
    let mut funcs = vec![0.0; g * kept.len()];
    for (t, &x) in grid.iter().enumerate() {
        // One kernel row against all Nystrom nodes, reused for every
        // eigenfunction extension at this grid point.
        let krow: Vec<f64> = rk.rule.nodes.iter().map(|&xi| kernel.eval(x, xi)).collect();
        for (c, &r) in kept.iter().enumerate() {
            let mut s = 0.0;
            for i in 0..q {
                s += rsq[i] * krow[i] * rk.vectors[i * q + r];
            }
            funcs[t * kept.len()] = funcs[t * kept.len()]; // keep layout explicit
            funcs[t * kept.len() + c] = s / rk.mu[r];
        }
    }
    let r = kept.len();
    // Modified Gram-Schmidt under the grid measure: keeps the projection
    // structure exact on the grid even where the Nystrom extension drifts.
    for c in 0..r {
        for prev in 0..c {
            let dot: f64 = (0..g).map(|t| funcs[t * r + prev] * funcs[t * r + c]).sum::<f64>() * cell;
            for t in 0..g {
                funcs[t * r + c] -= dot * funcs[t * r + prev];
            }
        }
        let norm: f64 = ((0..g).map(|t| funcs[t * r + c].powi(2)).sum::<f64>() * cell).sqrt();
        if norm > 0.0 {
            for t in 0..g {
                funcs[t * r + c] /= norm;
            }
        }
    }
    let mu = kept.iter().map(|&r| rk.mu[r]).collect();
    DppSampler { grid, cell, funcs, mu }
}

impl DppSampler {
    /// Draw one configuration: Bernoulli mixture over eigenfunctions, then
    /// the exact sequential algorithm for the selected projection kernel.
    /// The cardinality equals the number of selected eigenfunctions.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let r_total = self.mu.len();
        let g = self.grid.len();
        let selected: Vec<usize> =
            (0..r_total).filter(|&r| rng.gen::<f64>() < self.mu[r]).collect();
        let mut k = selected.len();
        if k == 0 {
            return Vec::new();
        }
        // Working copy V: G x k, columns = selected eigenfunctions.
        let mut v = vec![0.0; g * k];
        for (c, &r) in selected.iter().enumerate() {
            for t in 0..g {
                v[t * k + c] = self.funcs[t * r_total + r];
            }
        }
        let stride = k;
        let mut points = Vec::with_capacity(k);
        while k > 0 {
            // Density proportional to the row squared norms.
            let mut total = 0.0;
            let mut cum = Vec::with_capacity(g);
            for t in 0..g {
                let s: f64 = (0..k).map(|c| v[t * stride + c].powi(2)).sum();
                total += s * self.cell;
                cum.push(total);
            }
            let u = rng.gen::<f64>() * total;
            let t_star = cum.partition_point(|&c| c < u).min(g - 1);
            points.push(self.grid[t_star] + (rng.gen::<f64>() - 0.5) * self.cell);
            if k == 1 {
                break;
            }
            // Householder rotation sending the chosen row to ||row|| e_{k-1};
            // dropping the last column conditions the process on the point.
            let row: Vec<f64> = (0..k).map(|c| v[t_star * stride + c]).collect();
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            let mut hv = row.clone();
            hv[k - 1] -= norm;
            let hv_sq: f64 = hv.iter().map(|x| x * x).sum();
            if hv_sq > 1e-300 {
                for t in 0..g {
                    let dot: f64 = (0..k).map(|c| hv[c] * v[t * stride + c]).sum();
                    let f = 2.0 * dot / hv_sq;
                    for c in 0..k {
                        v[t * stride + c] -= f * hv[c];
                    }
                }
            }
            k -= 1;
        }
        points.sort_by(|a, b| a.total_cmp(b));
        points
    }
}

/// Variance integrals of the restriction machinery: `A` over `J x J^c`,
/// `B` over `I x I^c`, optionally the quartic trace, and `tr(1_I P)`.
#[derive(Debug, Clone)]
pub struct RestrictionDiagnostics {
    pub a: f64,
    pub b: f64,
    pub lhs_a2: Option<f64>,
    pub trace_i: f64,
    /// Analytic bound on the truncated complement tail of `A`.
    pub tail_bound: f64,
}

/// Build the complement node set for `[lo, hi]`: either bounded by the
/// kernel's effective support, or (sine kernel) extended far enough that
/// the `1/(pi d)` envelope keeps the missing tail under `tail_frac` of a
/// unit of variance.
fn complement_grid(kernel: &Kernel, lo: f64, hi: f64, reach: f64) -> (Rule, f64) {
    let (mut left, mut right) = kernel
        .support_hint()
        .unwrap_or((lo - reach, hi + reach));
    left = left.min(lo);
    right = right.max(hi);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut push = |r: Rule| {
        nodes.extend(r.nodes);
        weights.extend(r.weights);
    };
    if left < lo {
        push(kernel_grid(kernel, left, lo));
    }
    if right > hi {
        push(kernel_grid(kernel, hi, right));
    }
    // Tail of iint_{J x |y - J| > d} (1/(pi(x-y)))^2 <= |J| / (pi^2 d),
    // applied at the truncation distance actually used.
    let tail = match kernel {
        Kernel::Sine => {
            let d = (lo - left).min(right - hi).max(1e-9);
            (hi - lo) / (std::f64::consts::PI.powi(2) * d)
        }
        _ => 0.0,
    };
    (Rule { nodes, weights }, tail)
}

/// Compute the diagnostics for intervals `I subseteq J`. For the sine
/// kernel the complement is truncated at distance `reach`; the analytic
/// tail bound must stay below 1% of `A`. The quartic trace is optional
/// because its cost is cubic in the node counts.
pub fn restriction_diagnostics(
    kernel: &Kernel,
    j: (f64, f64),
    i: (f64, f64),
    reach: f64,
    with_quartic: bool,
) -> Result<RestrictionDiagnostics, DppError> {
    assert!(j.0 <= i.0 && i.1 <= j.1, "need I inside J");
    let grid_j = kernel_grid(kernel, j.0, j.1);
    let (grid_jc, tail) = complement_grid(kernel, j.0, j.1, reach);
    let a = cross_square_integral(kernel, &grid_j, &grid_jc);
    if tail > 0.01 * a.max(1e-12) {
        return Err(DppError::TailBudget { tail, value: a });
    }
    let b = if i == j {
        a
    } else {
        let grid_i = kernel_grid(kernel, i.0, i.1);
        let (grid_ic, _) = complement_grid(kernel, i.0, i.1, reach);
        cross_square_integral(kernel, &grid_i, &grid_ic)
    };
    let grid_i = kernel_grid(kernel, i.0, i.1);
    let ti_table = KernelTable::new(kernel, &grid_i.nodes);
    let trace_i: f64 = (0..grid_i.len()).map(|t| grid_i.weights[t] * ti_table.diagonal(t)).sum();
    let lhs_a2 = if with_quartic {
        Some(quartic_trace(kernel, &grid_j, &grid_jc))
    } else {
        None
    };
    Ok(RestrictionDiagnostics { a, b, lhs_a2, trace_i, tail_bound: tail })
}

/// `iint K(x,y)^2` with `x` on `inside` and `y` on `outside`.
fn cross_square_integral(kernel: &Kernel, inside: &Rule, outside: &Rule) -> f64 {
    let mut all = inside.nodes.clone();
    all.extend_from_slice(&outside.nodes);
    let table = KernelTable::new(kernel, &all);
    let n_in = inside.len();
    let mut acc = 0.0;
    for a in 0..n_in {
        let wa = inside.weights[a];
        let mut row = 0.0;
        for b in 0..outside.len() {
            row += outside.weights[b] * table.eval(a, n_in + b).powi(2);
        }
        acc += wa * row;
    }
    acc
}

/// Quartic trace `iint_{J x J} (int_{J^c} K(x,y) K(x',y) dy)^2 dx dx'`.
fn quartic_trace(kernel: &Kernel, inside: &Rule, outside: &Rule) -> f64 {
    let mut all = inside.nodes.clone();
    all.extend_from_slice(&outside.nodes);
    let table = KernelTable::new(kernel, &all);
    let n_in = inside.len();
    let n_out = outside.len();
    // Rows of K restricted to J x J^c, pre-weighted by the outer measure.
    let mut k_cross = vec![0.0; n_in * n_out];
    for a in 0..n_in {
        for b in 0..n_out {
            k_cross[a * n_out + b] = table.eval(a, n_in + b) * outside.weights[b].sqrt();
        }
    }
    let mut acc = 0.0;
    for a in 0..n_in {
        for ap in a..n_in {
            let mut kstar = 0.0;
            let ra = &k_cross[a * n_out..(a + 1) * n_out];
            let rb = &k_cross[ap * n_out..(ap + 1) * n_out];
            for b in 0..n_out {
                kstar += ra[b] * rb[b];
            }
            let contrib = inside.weights[a] * inside.weights[ap] * kstar * kstar;
            acc += if a == ap { contrib } else { 2.0 * contrib };
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    #[test]
    fn sine_kernel_values() {
        assert_eq!(eval_sine_kernel(0.7, 0.7), 1.0 - 0.0);
        assert_abs_diff_eq!(eval_sine_kernel(0.5, 0.0), 2.0 / std::f64::consts::PI, epsilon = 1e-15);
        assert_abs_diff_eq!(eval_sine_kernel(1.0, 0.0), 0.0, epsilon = 1e-15);
        // Series branch continuous with the ratio branch.
        let near = eval_sine_kernel(1e-9, 0.0);
        assert_abs_diff_eq!(near, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cd_kernel_rank_one_and_symmetry() {
        // N=1: projection on phi_0; K(0,0) = 1/sqrt(pi).
        assert_abs_diff_eq!(
            eval_cd_kernel(1, 0.0, 0.0),
            1.0 / std::f64::consts::PI.sqrt(),
            epsilon = 1e-12
        );
        for &(x, y) in &[(0.3, -1.2), (2.0, 2.1), (-0.7, 0.69)] {
            let a = eval_cd_kernel(25, x, y);
            let b = eval_cd_kernel(25, y, x);
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn cd_branches_agree_near_switch() {
        // The direct-sum and Christoffel-Darboux branches meet at 1e-4.
        for n in [5usize, 60] {
            for &x in &[-1.1, 0.4, 2.3] {
                let inner = eval_cd_kernel(n, x, x + 1e-4 - 1e-12);
                let outer = eval_cd_kernel(n, x, x + 1e-4 + 1e-12);
                assert!((inner - outer).abs() < 1e-8, "n={n} x={x}: {inner} vs {outer}");
                let diag = eval_cd_diagonal(n, x);
                let sum: f64 = hermite::phi_all(n - 1, x).iter().map(|p| p * p).sum();
                assert_abs_diff_eq!(diag, sum, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn cd_diagonal_matches_three_term_form() {
        // N h_N^2 - sqrt(N(N+1)) h_{N-1} h_{N+1}, folded into phi form.
        for n in [3usize, 12, 40] {
            for &x in &[-2.0, 0.1, 1.7] {
                let f = hermite::phi_all(n + 1, x);
                let alt = n as f64 * f[n] * f[n]
                    - (n as f64 * (n as f64 + 1.0)).sqrt() * f[n - 1] * f[n + 1];
                assert_abs_diff_eq!(eval_cd_diagonal(n, x), alt, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn cd_trace_is_n() {
        for n in [1usize, 7, 50] {
            let rule = quadrature::gauss_hermite_modified(n + 2);
            let tr: f64 = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(&x, &w)| w * eval_cd_diagonal(n, x))
                .sum();
            assert_abs_diff_eq!(tr, n as f64, epsilon = 1e-8 * n as f64);
        }
    }

    #[test]
    fn kernel_table_matches_pointwise() {
        let kernel = Kernel::ChristoffelDarboux { n: 30 };
        let nodes = [-3.0, -0.5, -0.5 + 5e-8, 1.9, 6.2];
        let table = KernelTable::new(&kernel, &nodes);
        for i in 0..nodes.len() {
            for j in 0..nodes.len() {
                let direct = kernel.eval(nodes[i], nodes[j]);
                assert_abs_diff_eq!(table.eval(i, j), direct, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn nystrom_sine_unit_interval() {
        let rk = nystrom_restrict(&Kernel::Sine, 0.0, 1.0, 48).unwrap();
        assert!(rk.mu[0] > 0.0 && rk.mu[0] < 1.0);
        assert_abs_diff_eq!(rk.sum_mu(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn nystrom_zero_kernel() {
        let rk = nystrom_restrict(&Kernel::Zero, 0.0, 2.0, 48).unwrap();
        assert!(rk.mu.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn counting_moments_sine_two_routes() {
        for &h in &[1.0, 2.0, 5.0] {
            let rk = nystrom_restrict_gated(&Kernel::Sine, 0.0, h).unwrap();
            let (mean, var) = counting_moments(&Kernel::Sine, &rk).unwrap();
            assert_abs_diff_eq!(mean, h, epsilon = 1e-8);
            assert!(var > 0.0 && var < mean);
        }
    }

    #[test]
    fn restriction_diagnostics_sine_shapes() {
        let d = restriction_diagnostics(&Kernel::Sine, (0.0, 6.0), (1.0, 5.0), 300.0, true).unwrap();
        assert!(d.a > 0.0 && d.b > 0.0);
        assert!(d.lhs_a2.unwrap() >= 0.0);
        assert_abs_diff_eq!(d.trace_i, 4.0, epsilon = 1e-8);
        // I = J collapses B onto A.
        let dd = restriction_diagnostics(&Kernel::Sine, (0.0, 4.0), (0.0, 4.0), 300.0, false).unwrap();
        assert_eq!(dd.a, dd.b);
    }

    #[test]
    fn sampler_rank_one_density() {
        // Single mu = 1 eigenfunction: points are iid from |phi|^2. The
        // sine kernel on a short interval is close to rank-one after
        // conditioning; instead use CD with N=1 (exact projection on
        // phi_0) restricted to a wide interval.
        let kernel = Kernel::ChristoffelDarboux { n: 1 };
        let rk = nystrom_restrict(&kernel, -6.0, 6.0, 96).unwrap();
        assert_abs_diff_eq!(rk.mu[0], 1.0, epsilon = 1e-9);
        assert!(rk.mu[1] < 1e-9);
        let sampler = prepare_sampler(&kernel, &rk, 4);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(10);
        let mut draws = Vec::new();
        for _ in 0..10_000 {
            let pts = sampler.sample(&mut rng);
            assert_eq!(pts.len(), 1);
            draws.push(pts[0]);
        }
        draws.sort_by(|a, b| a.total_cmp(b));
        // KS distance against the N(0, 1/2) law of |phi_0|^2.
        let mut ks = 0.0f64;
        for (i, &x) in draws.iter().enumerate() {
            let cdf = 0.5 * (1.0 + libm_erf(x));
            let emp_hi = (i + 1) as f64 / draws.len() as f64;
            let emp_lo = i as f64 / draws.len() as f64;
            ks = ks.max((cdf - emp_hi).abs()).max((cdf - emp_lo).abs());
        }
        assert!(ks < 0.05, "KS = {ks}");
    }

    // erf via Abramowitz-Stegun 7.1.26; plenty for a KS test at 0.05.
    fn libm_erf(x: f64) -> f64 {
        let sign = x.signum();
        let x = x.abs();
        let t = 1.0 / (1.0 + 0.3275911 * x);
        let poly = t
            * (0.254829592 + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
        sign * (1.0 - poly * (-x * x).exp())
    }

    #[test]
    fn sampler_cardinality_matches_poisson_binomial() {
        let rk = nystrom_restrict_gated(&Kernel::Sine, 0.0, 3.0).unwrap();
        let sampler = prepare_sampler(&Kernel::Sine, &rk, 4);
        let pb = crate::pb::PoissonBinomial::new(rk.mu.clone());
        let pmf = pb.pmf();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let draws = 20_000;
        let mut counts = vec![0usize; pmf.len()];
        for _ in 0..draws {
            let k = sampler.sample(&mut rng).len();
            counts[k.min(pmf.len() - 1)] += 1;
        }
        let tv: f64 = counts
            .iter()
            .zip(&pmf)
            .map(|(&c, &p)| (c as f64 / draws as f64 - p).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.03, "TV = {tv}");
    }
}
