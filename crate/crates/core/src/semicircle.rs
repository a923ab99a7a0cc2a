//! The semicircle law on `[-1, 1]` and the classical-location / bulk-scaling
//! helpers built on it.
//!
//! Density `rho(x) = (2/pi) sqrt(1 - x^2)` for `|x| <= 1`, matching the
//! convention where a GUE spectrum rescaled by `1/sqrt(2N)` fills `[-1, 1]`.

use std::f64::consts::PI;

/// Semicircle density `(2/pi) sqrt((1 - x^2)_+)`.
pub fn rho_sc(x: f64) -> f64 {
    let s = 1.0 - x * x;
    if s <= 0.0 {
        0.0
    } else {
        (2.0 / PI) * s.sqrt()
    }
}

/// CDF of the semicircle law: `1/2 + (x sqrt(1-x^2) + asin x) / pi` on
/// `[-1, 1]`, clamped outside.
pub fn semicircle_cdf(x: f64) -> f64 {
    if x <= -1.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        0.5 + (x * (1.0 - x * x).sqrt() + x.asin()) / PI
    }
}

/// Classical location `gamma_p`: the quantile with `F(gamma_p) = p`.
///
/// Bisection bracket then Newton polish; accurate to about `1e-14` in the
/// bulk (the density vanishes at the edges, so the quantile there is only
/// as good as the CDF's cube-root behaviour allows).
pub fn classical_location(p: f64) -> f64 {
    assert!((0.0..=1.0).contains(&p), "quantile argument out of range: {p}");
    if p == 0.0 {
        return -1.0;
    }
    if p == 1.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if semicircle_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..4 {
        let d = rho_sc(x);
        if d <= 0.0 {
            break;
        }
        let step = (semicircle_cdf(x) - p) / d;
        x = (x - step).clamp(lo - 1e-9, hi + 1e-9);
    }
    x.clamp(-1.0, 1.0)
}

/// Local scaling of the spectrum around bulk energy `x` (in `(-1, 1)`):
/// physical positions map through `f_x(t) = sqrt(2N) (x + t / (N rho(x)))`,
/// so unit spacing in `t` is one mean eigenvalue spacing.
#[derive(Debug, Clone, Copy)]
pub struct BulkScaling {
    pub n: usize,
    pub center: f64,
    sqrt2n: f64,
    density: f64,
}

impl BulkScaling {
    pub fn new(n: usize, center: f64) -> Self {
        assert!(center.abs() < 1.0, "bulk scaling needs |x| < 1, got {center}");
        let density = rho_sc(center);
        BulkScaling { n, center, sqrt2n: (2.0 * n as f64).sqrt(), density }
    }

    /// `f_x(t)`: local coordinate to physical (unscaled GUE) coordinate.
    pub fn to_physical(&self, t: f64) -> f64 {
        self.sqrt2n * (self.center + t / (self.n as f64 * self.density))
    }

    /// Inverse of `to_physical`.
    pub fn to_local(&self, lambda: f64) -> f64 {
        (lambda / self.sqrt2n - self.center) * self.n as f64 * self.density
    }

    /// Mean spacing in physical coordinates.
    pub fn spacing(&self) -> f64 {
        self.sqrt2n / (self.n as f64 * self.density)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cdf_matches_density_by_differentiation() {
        let h = 1e-6;
        for i in 1..40 {
            let x = -1.0 + 0.05 * i as f64;
            let fd = (semicircle_cdf(x + h) - semicircle_cdf(x - h)) / (2.0 * h);
            assert_abs_diff_eq!(fd, rho_sc(x), epsilon = 1e-8);
        }
    }

    #[test]
    fn cdf_endpoints_and_symmetry() {
        assert_eq!(semicircle_cdf(-1.0), 0.0);
        assert_eq!(semicircle_cdf(1.0), 1.0);
        assert_abs_diff_eq!(semicircle_cdf(0.0), 0.5, epsilon = 1e-15);
        for &x in &[0.2, 0.55, 0.93] {
            assert_abs_diff_eq!(
                semicircle_cdf(-x),
                1.0 - semicircle_cdf(x),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn quantile_round_trip() {
        for i in 1..100 {
            let p = i as f64 / 100.0;
            let x = classical_location(p);
            assert_abs_diff_eq!(semicircle_cdf(x), p, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(classical_location(0.5), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn bulk_scaling_round_trip_and_spacing() {
        let s = BulkScaling::new(500, 0.3);
        for &t in &[-4.0, 0.0, 2.5, 17.0] {
            assert_abs_diff_eq!(s.to_local(s.to_physical(t)), t, epsilon = 1e-9);
        }
        // Unit local step equals one spacing.
        let d = s.to_physical(1.0) - s.to_physical(0.0);
        assert_abs_diff_eq!(d, s.spacing(), epsilon = 1e-12);
        // Density of rescaled eigenvalues near x is N rho(x) per unit, so the
        // spacing matches the inverse local density in physical units.
        let phys_density = 500.0 * rho_sc(0.3) / (1000.0f64).sqrt();
        assert_abs_diff_eq!(s.spacing(), 1.0 / phys_density, epsilon = 1e-12);
    }
}
