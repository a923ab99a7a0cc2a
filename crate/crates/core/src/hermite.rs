//! Orthonormal Hermite polynomials and harmonic-oscillator functions.
//!
//! `h_n` are the orthonormal polynomials of the weight `exp(-x^2) dx`, so
//! `h_0 = pi^{-1/4}`, and the oscillator functions are
//! `phi_n(x) = h_n(x) exp(-x^2/2)`. The oscillator functions are evaluated
//! directly by the stabilized three-term recurrence
//! `phi_{n+1} = x sqrt(2/(n+1)) phi_n - sqrt(n/(n+1)) phi_{n-1}`,
//! carried in scaled form so that deep classically-forbidden regions
//! (where `exp(-x^2/2)` underflows) still recover the correct magnitudes
//! once the recurrence climbs back to the oscillatory regime.

/// `pi^{-1/4}`, the value of `h_0`.
pub const H0: f64 = 0.751_125_544_464_942_9;

/// Values of `phi_0..phi_{n_max}` (and `h_0..h_{n_max}` where representable)
/// at a single abscissa.
#[derive(Debug, Clone)]
pub struct HermiteTable {
    pub max_degree: usize,
    pub abscissa: f64,
    /// `values[n] = phi_n(x)`.
    pub values: Vec<f64>,
    /// `h_values[n] = h_n(x)`, `None` where `exp(x^2/2) phi_n` overflows.
    pub h_values: Vec<Option<f64>>,
}

/// Evaluate `phi_0(x) .. phi_{n_max}(x)` along with the polynomial values.
pub fn eval_oscillator(n_max: usize, x: f64) -> HermiteTable {
    assert!(x.is_finite(), "abscissa must be finite");
    let values = phi_all(n_max, x);
    let half_x2 = 0.5 * x * x;
    let h_values = values
        .iter()
        .map(|&phi| {
            if phi == 0.0 {
                return Some(0.0);
            }
            // h = phi * exp(x^2/2); representable iff ln|phi| + x^2/2 < ln(MAX).
            let log_h = phi.abs().ln() + half_x2;
            if log_h < 709.0 {
                Some(phi * half_x2.exp())
            } else {
                None
            }
        })
        .collect();
    HermiteTable { max_degree: n_max, abscissa: x, values, h_values }
}

/// `phi_n(x)` for all `n <= n_max`, using an exponent-carried recurrence.
pub fn phi_all(n_max: usize, x: f64) -> Vec<f64> {
    // Work with scaled pairs (f_{n-1}, f_n) and a shared log-scale L so that
    // phi_n = f_n * exp(L). Starting scale is L = -x^2/2 which may be far
    // below the underflow threshold; the recurrence grows out of it.
    let mut out = vec![0.0; n_max + 1];
    let mut log_scale = -0.5 * x * x;
    let mut f_prev = 0.0f64; // phi_{-1}
    let mut f = H0; // h_0; phi_0 = h_0 * exp(L)
    out[0] = materialize(f, log_scale);
    for n in 0..n_max {
        let nf = n as f64;
        let f_next = x * (2.0 / (nf + 1.0)).sqrt() * f - (nf / (nf + 1.0)).sqrt() * f_prev;
        f_prev = f;
        f = f_next;
        // Renormalize when the pair drifts in magnitude.
        let mag = f.abs().max(f_prev.abs());
        if mag > 1e100 {
            f *= 1e-100;
            f_prev *= 1e-100;
            log_scale += 100.0 * std::f64::consts::LN_10;
        } else if mag > 0.0 && mag < 1e-100 {
            f *= 1e100;
            f_prev *= 1e100;
            log_scale -= 100.0 * std::f64::consts::LN_10;
        }
        out[n + 1] = materialize(f, log_scale);
    }
    out
}

fn materialize(f: f64, log_scale: f64) -> f64 {
    if f == 0.0 {
        return 0.0;
    }
    let log_v = f.abs().ln() + log_scale;
    if log_v < -745.0 {
        0.0
    } else if log_scale > -700.0 {
        f * log_scale.exp()
    } else {
        // exp(log_scale) alone would underflow; recombine through the logs.
        f.signum() * log_v.exp()
    }
}

/// `phi_n(x)` alone.
pub fn phi(n: usize, x: f64) -> f64 {
    phi_all(n, x)[n]
}

/// Derivative `phi_n'(x)` from the lowering identity
/// `phi_n' + x phi_n = sqrt(2n) phi_{n-1}`.
pub fn phi_derivative(n: usize, x: f64) -> f64 {
    let tab = phi_all(n, x);
    let lower = if n == 0 { 0.0 } else { (2.0 * n as f64).sqrt() * tab[n - 1] };
    lower - x * tab[n]
}

/// Derivatives for all `n <= n_max`, given the already-computed values.
pub fn phi_derivatives_from(values: &[f64], x: f64) -> Vec<f64> {
    values
        .iter()
        .enumerate()
        .map(|(n, &v)| {
            let lower = if n == 0 { 0.0 } else { (2.0 * n as f64).sqrt() * values[n - 1] };
            lower - x * v
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn phi0_at_origin() {
        let t = eval_oscillator(0, 0.0);
        assert_abs_diff_eq!(t.values[0], 0.751_125_5, epsilon = 1e-6);
        assert_eq!(t.h_values[0], Some(t.values[0]));
    }

    #[test]
    fn phi1_odd() {
        let t = eval_oscillator(1, 0.0);
        assert_eq!(t.values[1], 0.0);
    }

    #[test]
    fn matches_h_times_gaussian() {
        for &x in &[-3.2f64, -0.5, 0.9, 4.4] {
            let t = eval_oscillator(30, x);
            let w = (-0.5 * x * x).exp();
            for n in 0..=30 {
                let h = t.h_values[n].expect("representable here");
                assert!(
                    (t.values[n] - h * w).abs() <= 1e-12 * t.values[n].abs().max(1.0),
                    "n={n} x={x}"
                );
            }
        }
    }

    #[test]
    fn uniformly_bounded() {
        for n in [0usize, 5, 50, 300, 1500] {
            for i in 0..200 {
                let x = -60.0 + 0.6 * i as f64;
                let v = phi(n, x);
                assert!(v.abs() <= 1.1, "phi_{n}({x}) = {v}");
            }
        }
    }

    #[test]
    fn deep_forbidden_region_recovers() {
        // exp(-x^2/2) underflows at x = 60, yet phi_n for n near x^2/2 is O(1).
        let x = 60.0;
        let vals = phi_all(2000, x);
        assert_eq!(vals[0], 0.0); // genuinely below the subnormal range
        let peak = vals[1800..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(peak > 1e-3, "oscillatory regime lost: peak {peak}");
    }

    #[test]
    fn lowering_identity_via_finite_difference() {
        let step = 1e-5;
        for n in [1usize, 7, 40] {
            for &x in &[-2.1f64, 0.3, 1.8] {
                let fd = (phi(n, x + step) - phi(n, x - step)) / (2.0 * step);
                assert_abs_diff_eq!(phi_derivative(n, x), fd, epsilon = 1e-6);
            }
        }
    }
}
