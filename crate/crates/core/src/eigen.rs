//! Dense Hermitian and symmetric tridiagonal eigensolvers.
//!
//! The route is the classical one: unitary Householder reduction of a
//! Hermitian matrix to a real symmetric tridiagonal matrix, followed by the
//! implicit-shift QL iteration. The tridiagonal solver is also used on its
//! own for Golub-Welsch quadrature rules and the tridiagonal GUE sampler.

use num_complex::Complex64;
use thiserror::Error;

const MAX_QL_ITERATIONS: usize = 60;

#[derive(Debug, Error)]
pub enum EigenError {
    #[error("QL iteration failed to converge after {0} sweeps")]
    NoConvergence(usize),
    #[error("matrix is not Hermitian to within {0:e} relative")]
    NotHermitian(f64),
}

/// Real symmetric tridiagonal matrix given by its diagonal and subdiagonal.
#[derive(Debug, Clone)]
pub struct SymmetricTridiagonal {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

impl SymmetricTridiagonal {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Self {
        assert_eq!(offdiag.len() + 1, diag.len(), "offdiag must have n-1 entries");
        Self { diag, offdiag }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>, EigenError> {
        let mut d = self.diag.clone();
        let mut e = self.offdiag.clone();
        e.push(0.0);
        ql_implicit(&mut d, &mut e, None)?;
        d.sort_by(|a, b| a.total_cmp(b));
        Ok(d)
    }

    /// Eigenvalues (ascending) and the matching orthonormal eigenvectors,
    /// returned column-wise in a flat row-major `n x n` array.
    pub fn eigen_with_vectors(&self) -> Result<(Vec<f64>, Vec<f64>), EigenError> {
        let n = self.dim();
        let mut d = self.diag.clone();
        let mut e = self.offdiag.clone();
        e.push(0.0);
        let mut z = vec![0.0; n * n];
        for i in 0..n {
            z[i * n + i] = 1.0;
        }
        ql_implicit(&mut d, &mut e, Some((&mut z, n)))?;
        // Sort eigenpairs ascending.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
        let mut sorted_d = vec![0.0; n];
        let mut sorted_z = vec![0.0; n * n];
        for (new_col, &old_col) in order.iter().enumerate() {
            sorted_d[new_col] = d[old_col];
            for row in 0..n {
                sorted_z[row * n + new_col] = z[row * n + old_col];
            }
        }
        Ok((sorted_d, sorted_z))
    }

    /// Number of eigenvalues strictly below `x`, by the Sturm count of the
    /// shifted `LDL^T` recurrence.
    pub fn count_below(&self, x: f64) -> usize {
        let n = self.dim();
        let tiny = f64::MIN_POSITIVE / f64::EPSILON;
        let mut count = 0usize;
        let mut d = self.diag[0] - x;
        if d < 0.0 {
            count += 1;
        }
        for i in 1..n {
            if d.abs() < tiny {
                d = -tiny;
            }
            d = self.diag[i] - x - self.offdiag[i - 1] * self.offdiag[i - 1] / d;
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Eigenvalues with (ascending, 0-based) indices in `lo..hi`, by Sturm
    /// bisection: `O((hi-lo) n log(1/eps))`, cheaper than a full solve when
    /// only a window of the spectrum is needed.
    pub fn eigenvalues_in_index_range(&self, lo: usize, hi: usize) -> Vec<f64> {
        let n = self.dim();
        assert!(lo < hi && hi <= n);
        // Gershgorin bounds.
        let mut lower = f64::INFINITY;
        let mut upper = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.offdiag[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.offdiag[i].abs() } else { 0.0 };
            lower = lower.min(self.diag[i] - r);
            upper = upper.max(self.diag[i] + r);
        }
        let scale = upper.abs().max(lower.abs()).max(1.0);
        (lo..hi)
            .map(|k| {
                let (mut a, mut b) = (lower, upper);
                while b - a > 4.0 * f64::EPSILON * scale {
                    let mid = 0.5 * (a + b);
                    if self.count_below(mid) <= k {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                0.5 * (a + b)
            })
            .collect()
    }
}

/// Implicit-shift QL on a symmetric tridiagonal matrix.
///
/// `d` holds the diagonal, `e` the subdiagonal in `e[0..n-1]` with `e[n-1]`
/// scratch. If `z` is given it must be an identity (or a basis to rotate)
/// stored row-major with the supplied stride; the accumulated rotations turn
/// its columns into eigenvectors.
fn ql_implicit(
    d: &mut [f64],
    e: &mut [f64],
    mut z: Option<(&mut [f64], usize)>,
) -> Result<(), EigenError> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    // Absolute deflation floor: clusters of numerically-zero eigenvalues
    // (rank-deficient inputs) leave subnormal junk on which the purely
    // relative test never fires. Deflating at eps * ||T|| stays inside the
    // backward-error budget of the preceding tridiagonalization.
    let anorm = d
        .iter()
        .zip(e.iter())
        .fold(0.0f64, |m, (&di, &ei)| m.max(di.abs() + 2.0 * ei.abs()));
    let floor = f64::EPSILON * anorm;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITERATIONS {
                return Err(EigenError::NoConvergence(MAX_QL_ITERATIONS));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some((zm, stride)) = &mut z {
                    let stride = *stride;
                    for k in 0..n {
                        f = zm[k * stride + i + 1];
                        zm[k * stride + i + 1] = s * zm[k * stride + i] + c * f;
                        zm[k * stride + i] = c * zm[k * stride + i] - s * f;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Dense Hermitian matrix in row-major storage.
#[derive(Debug, Clone)]
pub struct HermitianMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl HermitianMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![Complex64::new(0.0, 0.0); n * n] }
    }

    pub fn from_rows(n: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), n * n);
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] = v;
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    /// Top-left `m x m` principal submatrix.
    pub fn leading_minor(&self, m: usize) -> HermitianMatrix {
        assert!(m <= self.n);
        let mut data = Vec::with_capacity(m * m);
        for i in 0..m {
            data.extend_from_slice(&self.data[i * self.n..i * self.n + m]);
        }
        HermitianMatrix { n: m, data }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest deviation from Hermitian symmetry, relative to the Frobenius norm.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in i..self.n {
                let d = (self.get(i, j) - self.get(j, i).conj()).norm();
                worst = worst.max(d);
            }
        }
        let scale = self.frobenius_norm().max(f64::MIN_POSITIVE);
        worst / scale
    }

    /// Unitary reduction to real symmetric tridiagonal form.
    ///
    /// Returns the tridiagonal matrix and the Householder reflectors
    /// `(v, tau)` needed to back-transform eigenvectors.
    pub fn tridiagonalize(&self) -> (SymmetricTridiagonal, Vec<Reflector>) {
        let n = self.n;
        let mut a = self.data.clone();
        let mut reflectors = Vec::new();
        let mut offdiag = vec![0.0; n.saturating_sub(1)];

        for k in 0..n.saturating_sub(1) {
            // Column k below the subdiagonal gets annihilated.
            let len = n - k - 1;
            let alpha = a[(k + 1) * n + k];
            let mut xnorm_sq = 0.0;
            for i in k + 2..n {
                xnorm_sq += a[i * n + k].norm_sqr();
            }
            let xnorm = xnorm_sq.sqrt();

            if xnorm == 0.0 && alpha.im == 0.0 {
                offdiag[k] = alpha.re;
                continue;
            }

            // zlarfg: beta real, H^H [alpha; x] = beta e1 with v[0] = 1.
            let beta = -(alpha.norm_sqr() + xnorm_sq).sqrt().copysign(alpha.re);
            let tau = Complex64::new((beta - alpha.re) / beta, -alpha.im / beta);
            let scale = (alpha - beta).inv();

            let mut v = vec![Complex64::new(0.0, 0.0); len];
            v[0] = Complex64::new(1.0, 0.0);
            for i in 1..len {
                v[i] = a[(k + 1 + i) * n + k] * scale;
            }
            offdiag[k] = beta;

            // Two-sided update of the trailing block:
            // A := A - tau p v^H - conj(tau) v p^H + |tau|^2 (v^H p) v v^H
            // restricted to rows/cols k+1.., with p = A v.
            let mut p = vec![Complex64::new(0.0, 0.0); len];
            for i in 0..len {
                let row = (k + 1 + i) * n + (k + 1);
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..len {
                    acc += a[row + j] * v[j];
                }
                p[i] = acc;
            }
            let vhp: Complex64 = v.iter().zip(&p).map(|(vi, pi)| vi.conj() * pi).sum();
            let tt = tau.norm_sqr();
            for i in 0..len {
                for j in 0..len {
                    let idx = (k + 1 + i) * n + (k + 1 + j);
                    a[idx] = a[idx] - tau * p[i] * v[j].conj() - tau.conj() * v[i] * p[j].conj()
                        + tt * vhp * v[i] * v[j].conj();
                }
            }
            // Explicitly set the annihilated entries.
            a[(k + 1) * n + k] = Complex64::new(beta, 0.0);
            a[k * n + k + 1] = Complex64::new(beta, 0.0);
            for i in k + 2..n {
                a[i * n + k] = Complex64::new(0.0, 0.0);
                a[k * n + i] = Complex64::new(0.0, 0.0);
            }
            reflectors.push(Reflector { offset: k + 1, v, tau });
        }

        let diag: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
        (SymmetricTridiagonal::new(diag, offdiag), reflectors)
    }
}

/// A Householder reflector `H = I - tau v v^H` acting on rows `offset..`.
#[derive(Debug, Clone)]
pub struct Reflector {
    offset: usize,
    v: Vec<Complex64>,
    tau: Complex64,
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Column-wise eigenvectors (row-major `n x n`), present on request.
    pub vectors: Option<Vec<Complex64>>,
}

/// Full eigendecomposition via Householder tridiagonalization + implicit QL.
pub fn eigen_hermitian(h: &HermitianMatrix, want_vectors: bool) -> Result<HermitianEigen, EigenError> {
    let defect = h.hermitian_defect();
    if defect > 1e-12 {
        return Err(EigenError::NotHermitian(defect));
    }
    let n = h.dim();
    let (tri, reflectors) = h.tridiagonalize();
    if !want_vectors {
        let values = tri.eigenvalues()?;
        return Ok(HermitianEigen { values, vectors: None });
    }
    let (values, z) = tri.eigen_with_vectors()?;
    // Lift the real tridiagonal eigenvectors to complex and back-transform.
    let mut v: Vec<Complex64> = z.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    for refl in reflectors.iter().rev() {
        apply_reflector_left(&mut v, n, refl);
    }
    Ok(HermitianEigen { values, vectors: Some(v) })
}

fn apply_reflector_left(m: &mut [Complex64], n: usize, refl: &Reflector) {
    let len = refl.v.len();
    let off = refl.offset;
    // m := (I - tau v v^H) m, v acting on rows off..off+len.
    for col in 0..n {
        let mut dot = Complex64::new(0.0, 0.0);
        for i in 0..len {
            dot += refl.v[i].conj() * m[(off + i) * n + col];
        }
        let f = refl.tau * dot;
        for i in 0..len {
            m[(off + i) * n + col] -= f * refl.v[i];
        }
    }
}

/// Backward error `||H V - V diag(lambda)||_F` of a computed eigensystem.
pub fn backward_error(h: &HermitianMatrix, eig: &HermitianEigen) -> f64 {
    let n = h.dim();
    let v = eig.vectors.as_ref().expect("eigenvectors required");
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut hv = Complex64::new(0.0, 0.0);
            for k in 0..n {
                hv += h.get(i, k) * v[k * n + j];
            }
            let r = hv - v[i * n + j] * eig.values[j];
            acc += r.norm_sqr();
        }
    }
    acc.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn diagonal_matrix_sorted() {
        let mut h = HermitianMatrix::zeros(3);
        h.set(0, 0, Complex64::new(3.0, 0.0));
        h.set(1, 1, Complex64::new(1.0, 0.0));
        h.set(2, 2, Complex64::new(2.0, 0.0));
        let eig = eigen_hermitian(&h, false).unwrap();
        assert_eq!(eig.values, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn two_by_two_by_hand() {
        let mut h = HermitianMatrix::zeros(2);
        h.set(0, 1, Complex64::new(1.0, 0.0));
        h.set(1, 0, Complex64::new(1.0, 0.0));
        let eig = eigen_hermitian(&h, true).unwrap();
        assert_abs_diff_eq!(eig.values[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.values[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn complex_hermitian_residual() {
        let mut h = HermitianMatrix::zeros(4);
        let entries = [
            (0usize, 1usize, 0.3, -0.7),
            (0, 2, -1.1, 0.2),
            (0, 3, 0.5, 0.5),
            (1, 2, 0.9, 1.3),
            (1, 3, -0.2, -0.4),
            (2, 3, 1.7, 0.1),
        ];
        for (i, j, re, im) in entries {
            h.set(i, j, Complex64::new(re, im));
            h.set(j, i, Complex64::new(re, -im));
        }
        for i in 0..4 {
            h.set(i, i, Complex64::new(i as f64 - 1.5, 0.0));
        }
        let eig = eigen_hermitian(&h, true).unwrap();
        let err = backward_error(&h, &eig);
        assert!(err <= 1e-12 * h.frobenius_norm(), "residual {err}");
        // Trace is preserved.
        let trace: f64 = (0..4).map(|i| h.get(i, i).re).sum();
        let sum: f64 = eig.values.iter().sum();
        assert_abs_diff_eq!(trace, sum, epsilon = 1e-12);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut h = HermitianMatrix::zeros(2);
        h.set(0, 1, Complex64::new(1.0, 0.0));
        h.set(1, 0, Complex64::new(2.0, 0.0));
        assert!(matches!(eigen_hermitian(&h, false), Err(EigenError::NotHermitian(_))));
    }

    #[test]
    fn tridiagonal_known_eigenvalues() {
        // Second-difference matrix: eigenvalues 2 - 2 cos(k pi / (n+1)).
        let n = 12;
        let tri = SymmetricTridiagonal::new(vec![2.0; n], vec![-1.0; n - 1]);
        let vals = tri.eigenvalues().unwrap();
        for (k, v) in vals.iter().enumerate() {
            let expect = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert_abs_diff_eq!(*v, expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn tridiagonal_vectors_orthonormal() {
        let n = 20;
        let diag: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let off: Vec<f64> = (0..n - 1).map(|i| 0.5 + (i as f64 * 0.11).cos()).collect();
        let tri = SymmetricTridiagonal::new(diag, off);
        let (vals, z) = tri.eigen_with_vectors().unwrap();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        for a in 0..n {
            for b in 0..n {
                let dot: f64 = (0..n).map(|r| z[r * n + a] * z[r * n + b]).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(dot, expect, epsilon = 1e-10);
            }
        }
    }
}
