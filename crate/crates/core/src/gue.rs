//! GUE sampling in the normalization with matrix density proportional to
//! `exp(-tr H^2)`: real diagonal entries `N(0, 1/2)`, off-diagonal real and
//! imaginary parts each `N(0, 1/4)`. Under this convention the spectrum
//! fills `[-sqrt(2N), sqrt(2N)]`.
//!
//! Three samplers live here:
//! * dense matrices (needed whenever the minor structure itself matters),
//! * the tridiagonal beta=2 model, which has the same spectral law at
//!   `O(N)` storage and `O(N^2)` solve time,
//! * a two-level sampler producing a joint (minor, full) spectrum pair by
//!   solving the Schur-complement secular equation, which avoids dense
//!   `O(N^3)` work when only the two top levels are needed.

use std::io::{self, Read, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, Normal};
use thiserror::Error;

use crate::eigen::{self, EigenError, HermitianMatrix, SymmetricTridiagonal};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error("exact eigenvalue tie at index {0} (numerical degeneracy)")]
    DegenerateSpectrum(usize),
    #[error("interlacing violated between levels {upper} and {lower} at index {index}")]
    InterlacingViolated { upper: usize, lower: usize, index: usize },
    #[error("near-degenerate Schur denominator |lambda' - lambda| = {0:e}")]
    NearPole(f64),
    #[error("spectrum io: {0}")]
    Io(#[from] io::Error),
    #[error("spectrum dump record is malformed")]
    BadRecord,
}

/// Per-trial RNG stream: `seed` identifies the experiment, `trial` the
/// independent repetition. Streams are decorrelated by a splitmix64 hash
/// so trial indices can be assigned to workers in any order.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut x = seed ^ trial.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    // splitmix64 finalizer, twice for good measure.
    for _ in 0..2 {
        x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = x;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        x = z ^ (z >> 31);
    }
    ChaCha8Rng::seed_from_u64(x)
}

/// A GUE sample together with the seed that produced it.
#[derive(Debug, Clone)]
pub struct GueMatrix {
    pub matrix: HermitianMatrix,
    pub rng_seed: u64,
}

impl GueMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

/// Draw an `N x N` GUE matrix deterministically from `seed`.
pub fn sample_gue(n: usize, seed: u64) -> GueMatrix {
    let mut rng = trial_rng(seed, 0);
    GueMatrix { matrix: sample_gue_with(n, &mut rng), rng_seed: seed }
}

/// Draw a GUE matrix from an already-positioned RNG stream.
pub fn sample_gue_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> HermitianMatrix {
    assert!(n >= 1);
    let diag = Normal::new(0.0, 0.5f64.sqrt()).unwrap();
    let off = Normal::new(0.0, 0.5).unwrap(); // std 1/2 <=> variance 1/4
    let mut h = HermitianMatrix::zeros(n);
    for i in 0..n {
        h.set(i, i, Complex64::new(diag.sample(rng), 0.0));
        for j in (i + 1)..n {
            let v = Complex64::new(off.sample(rng), off.sample(rng));
            h.set(i, j, v);
            h.set(j, i, v.conj());
        }
    }
    h
}

/// Sorted spectrum of one Hermitian matrix at a given minor level.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Minor size `M` (equals `eigenvalues.len()`).
    pub level: usize,
    /// Strictly ascending eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// Column-wise eigenvectors (row-major `M x M`), present on request.
    pub vectors: Option<Vec<Complex64>>,
}

impl Spectrum {
    fn from_values(level: usize, eigenvalues: Vec<f64>, vectors: Option<Vec<Complex64>>) -> Result<Self, ModelError> {
        if let Some(i) = eigenvalues.windows(2).position(|w| w[0] >= w[1]) {
            return Err(ModelError::DegenerateSpectrum(i));
        }
        Ok(Spectrum { level, eigenvalues, vectors })
    }
}

/// Eigen-decompose a Hermitian matrix into a `Spectrum`.
pub fn spectrum(h: &HermitianMatrix, want_vectors: bool) -> Result<Spectrum, ModelError> {
    let eig = eigen::eigen_hermitian(h, want_vectors)?;
    Spectrum::from_values(h.dim(), eig.values, eig.vectors)
}

/// Spectra of the nested top-left minors.
#[derive(Debug, Clone)]
pub struct MinorChain {
    /// Levels `N, N-1, ..., N-k` in that order.
    pub spectra: Vec<Spectrum>,
}

/// Compute spectra of the top-left `M x M` blocks for `M = N, ..., N-k`,
/// verifying the Cauchy interlacing law between consecutive levels.
pub fn minor_chain(h: &GueMatrix, k: usize) -> Result<MinorChain, ModelError> {
    let n = h.dim();
    assert!(k < n);
    let mut spectra = Vec::with_capacity(k + 1);
    for m in ((n - k)..=n).rev() {
        let minor = h.matrix.leading_minor(m);
        spectra.push(spectrum(&minor, false)?);
    }
    for w in spectra.windows(2) {
        check_interlacing(&w[0], &w[1])?;
    }
    Ok(MinorChain { spectra })
}

fn check_interlacing(upper: &Spectrum, lower: &Spectrum) -> Result<(), ModelError> {
    let lam = &upper.eigenvalues;
    let lam_p = &lower.eigenvalues;
    for i in 0..lam_p.len() {
        if !(lam[i] < lam_p[i] && lam_p[i] < lam[i + 1]) {
            return Err(ModelError::InterlacingViolated {
                upper: upper.level,
                lower: lower.level,
                index: i,
            });
        }
    }
    Ok(())
}

/// Verify the Schur-complement secular identity on a sampled matrix: for
/// each eigenvalue `lambda_i` of `H`, return
/// `|a_NN - lambda_i - sum_j |X_j|^2 / (lambda'_j - lambda_i)|`, where
/// `lambda'_j` are the eigenvalues of the top-left `(N-1)`-minor and `X`
/// is the last column expressed in the minor's eigenbasis.
pub fn schur_residual(h: &GueMatrix) -> Result<Vec<f64>, ModelError> {
    let n = h.dim();
    assert!(n >= 2);
    let full = spectrum(&h.matrix, false)?;
    let minor = spectrum(&h.matrix.leading_minor(n - 1), true)?;
    let v = minor.vectors.as_ref().expect("requested vectors");
    let m = n - 1;
    // X_j = (column j of V')^* dot (last column of H, top n-1 entries).
    let weights: Vec<f64> = (0..m)
        .map(|j| {
            let mut x = Complex64::new(0.0, 0.0);
            for r in 0..m {
                x += v[r * m + j].conj() * h.matrix.get(r, n - 1);
            }
            x.norm_sqr()
        })
        .collect();
    let a_nn = h.matrix.get(n - 1, n - 1).re;
    full.eigenvalues
        .iter()
        .map(|&lam| {
            let mut s = a_nn - lam;
            for (w, &lp) in weights.iter().zip(&minor.eigenvalues) {
                let d = lp - lam;
                if d.abs() < 1e-13 {
                    return Err(ModelError::NearPole(d.abs()));
                }
                s -= w / d;
            }
            Ok(s.abs())
        })
        .collect()
}

/// Tridiagonal model with the GUE spectral law: diagonal `N(0, 1/2)`,
/// off-diagonal `b_k = sqrt(Gamma(N-k, 1/2))` for `k = 1..N-1` (the
/// Dumitriu-Edelman beta=2 matrix rescaled to the `exp(-tr H^2)`
/// convention).
pub fn sample_tridiagonal_gue<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SymmetricTridiagonal {
    assert!(n >= 1);
    let diag_law = Normal::new(0.0, 0.5f64.sqrt()).unwrap();
    let diag: Vec<f64> = (0..n).map(|_| diag_law.sample(rng)).collect();
    let offdiag: Vec<f64> = (1..n)
        .map(|k| {
            let shape = (n - k) as f64;
            Gamma::new(shape, 0.5).unwrap().sample(rng).sqrt()
        })
        .collect();
    SymmetricTridiagonal::new(diag, offdiag)
}

/// Sorted GUE spectrum via the tridiagonal model: `O(N^2)` per trial.
pub fn sample_gue_spectrum<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Vec<f64>, ModelError> {
    Ok(sample_tridiagonal_gue(n, rng).eigenvalues()?)
}

/// Joint sample of the top two levels of the minor process.
#[derive(Debug, Clone)]
pub struct TwoLevelSample {
    /// Eigenvalues of the `(N-1)`-minor, ascending.
    pub minor: Vec<f64>,
    /// Eigenvalues of the full matrix, ascending. In windowed mode only
    /// the requested index range is populated; see `top_range`.
    pub top: Vec<f64>,
    /// Indices `[lo, hi)` of the full spectrum present in `top`.
    pub top_range: (usize, usize),
}

/// Secular function `f(lambda) = a - lambda - sum_j w_j / (lp_j - lambda)`.
fn secular(a: f64, lp: &[f64], w: &[f64], lam: f64) -> f64 {
    let mut s = a - lam;
    for (&x, &wt) in lp.iter().zip(w) {
        s -= wt / (x - lam);
    }
    s
}

/// Root of the secular equation in the open interval between consecutive
/// minor eigenvalues (index `i` means the root in `(lp[i-1], lp[i])`, with
/// infinite sentinels at the ends). `f` is strictly decreasing on each
/// such interval, going from `+inf` to `-inf`, so plain bisection on a
/// sign-correct bracket converges unconditionally.
fn secular_root(a: f64, lp: &[f64], w: &[f64], i: usize) -> f64 {
    let m = lp.len();
    let spread: f64 = 1.0 + w.iter().sum::<f64>().sqrt() + a.abs();
    let (mut lo, mut hi) = if i == 0 {
        // Leftmost root: expand downward until f > 0.
        let hi = lp[0];
        let mut lo = lp[0] - spread;
        let mut step = spread;
        while secular(a, lp, w, lo) <= 0.0 {
            step *= 2.0;
            lo -= step;
        }
        (lo, hi)
    } else if i == m {
        let lo = lp[m - 1];
        let mut hi = lp[m - 1] + spread;
        let mut step = spread;
        while secular(a, lp, w, hi) >= 0.0 {
            step *= 2.0;
            hi += step;
        }
        (lo, hi)
    } else {
        (lp[i - 1], lp[i])
    };
    // Interior brackets open at poles: nudge inward off the singularities.
    for _ in 0..120 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if secular(a, lp, w, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Draw a joint (minor, full) spectrum pair of sizes `(N-1, N)` without
/// forming a dense matrix: the minor comes from the tridiagonal model and
/// the full spectrum from the Schur secular equation with
/// `|X_j|^2 ~ Exp(mean 1/2)` and `a_NN ~ N(0, 1/2)`.
///
/// `window = Some((lo, hi))` solves only for full-spectrum indices in
/// `[lo, hi)`, which costs `O((hi-lo) * N)` instead of `O(N^2)` on top of
/// the minor solve.
pub fn sample_two_level<R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
    window: Option<(usize, usize)>,
) -> Result<TwoLevelSample, ModelError> {
    assert!(n >= 2);
    let minor = sample_gue_spectrum(n - 1, rng)?;
    let exp_law = Exp::new(2.0).unwrap(); // rate 2 <=> mean 1/2
    let weights: Vec<f64> = (0..n - 1).map(|_| exp_law.sample(rng)).collect();
    let a_nn: f64 = Normal::new(0.0, 0.5f64.sqrt()).unwrap().sample(rng);
    let (lo, hi) = window.unwrap_or((0, n));
    assert!(lo < hi && hi <= n);
    let top: Vec<f64> = (lo..hi).map(|i| secular_root(a_nn, &minor, &weights, i)).collect();
    Ok(TwoLevelSample { minor, top, top_range: (lo, hi) })
}

/// Solve the full secular system for explicitly given data; used by tests
/// to cross-check against a dense eigensolve of the same matrix.
pub fn secular_spectrum(a_nn: f64, minor: &[f64], weights: &[f64]) -> Vec<f64> {
    (0..=minor.len()).map(|i| secular_root(a_nn, minor, weights, i)).collect()
}

const DUMP_MAGIC: u32 = 0x4d4c_5350; // "MLSP"

/// Append one spectrum record to a binary dump: magic, level, N, seed,
/// then `level` eigenvalues, everything little-endian.
pub fn write_spectrum_record<W: Write>(
    w: &mut W,
    spec: &Spectrum,
    matrix_size: u32,
    seed: u64,
) -> io::Result<()> {
    w.write_all(&DUMP_MAGIC.to_le_bytes())?;
    w.write_all(&(spec.level as u32).to_le_bytes())?;
    w.write_all(&matrix_size.to_le_bytes())?;
    w.write_all(&seed.to_le_bytes())?;
    for &v in &spec.eigenvalues {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Read back one record written by `write_spectrum_record`; `Ok(None)` at
/// a clean end of stream.
pub fn read_spectrum_record<R: Read>(r: &mut R) -> Result<Option<(Spectrum, u32, u64)>, ModelError> {
    let mut magic = [0u8; 4];
    match r.read_exact(&mut magic) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    if u32::from_le_bytes(magic) != DUMP_MAGIC {
        return Err(ModelError::BadRecord);
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let level = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b4)?;
    let n = u32::from_le_bytes(b4);
    r.read_exact(&mut b8)?;
    let seed = u64::from_le_bytes(b8);
    let mut eigenvalues = Vec::with_capacity(level);
    for _ in 0..level {
        r.read_exact(&mut b8)?;
        eigenvalues.push(f64::from_le_bytes(b8));
    }
    let spec = Spectrum::from_values(level, eigenvalues, None).map_err(|_| ModelError::BadRecord)?;
    Ok(Some((spec, n, seed)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn deterministic_and_hermitian() {
        let a = sample_gue(16, 7);
        let b = sample_gue(16, 7);
        assert_eq!(a.matrix.as_slice(), b.matrix.as_slice());
        assert_eq!(a.matrix.hermitian_defect(), 0.0);
        let c = sample_gue(16, 8);
        assert_ne!(a.matrix.as_slice(), c.matrix.as_slice());
    }

    #[test]
    fn trace_square_moment() {
        // E tr H^2 = N/2 + 2 * (N(N-1)/2) * 1/4 = N^2/2; N=8 gives 32.
        let n = 8;
        let trials = 10_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for t in 0..trials {
            let mut rng = trial_rng(11, t);
            let h = sample_gue_with(n, &mut rng);
            let tr: f64 = h.as_slice().iter().map(|z| z.norm_sqr()).sum();
            sum += tr;
            sumsq += tr * tr;
        }
        let mean = sum / trials as f64;
        let var = sumsq / trials as f64 - mean * mean;
        let stderr = (var / trials as f64).sqrt();
        assert!((mean - 32.0).abs() < 3.0 * stderr, "mean {mean}, stderr {stderr}");
    }

    #[test]
    fn tridiagonal_trace_moment_matches_dense_law() {
        let n = 8;
        let trials = 10_000;
        let mut sum = 0.0;
        for t in 0..trials {
            let mut rng = trial_rng(12, t);
            let tri = sample_tridiagonal_gue(n, &mut rng);
            let vals = tri.eigenvalues().unwrap();
            sum += vals.iter().map(|v| v * v).sum::<f64>();
        }
        let mean = sum / trials as f64;
        assert!((mean - 32.0).abs() < 0.5, "mean tr T^2 = {mean}");
    }

    #[test]
    fn minor_chain_interlaces() {
        let h = sample_gue(4, 3);
        let chain = minor_chain(&h, 3).unwrap();
        let sizes: Vec<usize> = chain.spectra.iter().map(|s| s.level).collect();
        assert_eq!(sizes, vec![4, 3, 2, 1]);
        let h50 = sample_gue(50, 21);
        minor_chain(&h50, 1).unwrap();
    }

    #[test]
    fn schur_residual_two_by_two() {
        let mut m = HermitianMatrix::zeros(2);
        m.set(0, 0, Complex64::new(1.3, 0.0));
        m.set(1, 1, Complex64::new(-0.4, 0.0));
        m.set(0, 1, Complex64::new(0.7, -0.2));
        m.set(1, 0, Complex64::new(0.7, 0.2));
        let res = schur_residual(&GueMatrix { matrix: m, rng_seed: 0 }).unwrap();
        for r in res {
            assert!(r < 1e-12, "residual {r}");
        }
    }

    #[test]
    fn schur_residual_sampled() {
        let h = sample_gue(50, 5);
        let res = schur_residual(&h).unwrap();
        let max = res.iter().fold(0.0f64, |m, &r| m.max(r));
        assert!(max < 1e-7, "max residual {max}");
    }

    #[test]
    fn secular_roots_match_dense_eigensolve() {
        // Build the secular data from an actual matrix so the comparison is
        // deterministic: minor spectrum, rotated last column, corner entry.
        let n = 30;
        let h = sample_gue(n, 99);
        let full = spectrum(&h.matrix, false).unwrap();
        let minor = spectrum(&h.matrix.leading_minor(n - 1), true).unwrap();
        let v = minor.vectors.as_ref().unwrap();
        let m = n - 1;
        let weights: Vec<f64> = (0..m)
            .map(|j| {
                let mut x = Complex64::new(0.0, 0.0);
                for r in 0..m {
                    x += v[r * m + j].conj() * h.matrix.get(r, n - 1);
                }
                x.norm_sqr()
            })
            .collect();
        let a_nn = h.matrix.get(n - 1, n - 1).re;
        let roots = secular_spectrum(a_nn, &minor.eigenvalues, &weights);
        for (r, l) in roots.iter().zip(&full.eigenvalues) {
            assert_abs_diff_eq!(r, l, epsilon = 1e-9);
        }
    }

    #[test]
    fn two_level_interlaces_and_window_agrees() {
        let mut rng = trial_rng(4, 17);
        let s = sample_two_level(40, &mut rng, None).unwrap();
        assert_eq!(s.minor.len(), 39);
        assert_eq!(s.top.len(), 40);
        for i in 0..39 {
            assert!(s.top[i] < s.minor[i] && s.minor[i] < s.top[i + 1]);
        }
        // Same stream, windowed: identical values on the window.
        let mut rng2 = trial_rng(4, 17);
        let w = sample_two_level(40, &mut rng2, Some((15, 25))).unwrap();
        assert_eq!(w.top_range, (15, 25));
        for (k, &v) in w.top.iter().enumerate() {
            assert_abs_diff_eq!(v, s.top[15 + k], epsilon = 1e-12);
        }
    }

    #[test]
    fn dump_round_trip() {
        let h = sample_gue(6, 42);
        let spec = spectrum(&h.matrix, false).unwrap();
        let mut buf = Vec::new();
        write_spectrum_record(&mut buf, &spec, 6, 42).unwrap();
        write_spectrum_record(&mut buf, &spec, 6, 43).unwrap();
        let mut cur = io::Cursor::new(buf);
        let (s1, n1, seed1) = read_spectrum_record(&mut cur).unwrap().unwrap();
        assert_eq!((n1, seed1), (6, 42));
        assert_eq!(s1.eigenvalues, spec.eigenvalues);
        let (_, _, seed2) = read_spectrum_record(&mut cur).unwrap().unwrap();
        assert_eq!(seed2, 43);
        assert!(read_spectrum_record(&mut cur).unwrap().is_none());
    }
}
