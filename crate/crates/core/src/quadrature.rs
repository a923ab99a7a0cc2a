//! Gauss-Legendre and Gauss-Hermite rules built by Golub-Welsch from the
//! Jacobi matrices of the respective orthogonal polynomials, so no tables
//! are needed.

use crate::eigen::SymmetricTridiagonal;
use crate::hermite;

/// A quadrature rule: paired nodes and weights.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Gauss-Legendre rule of the given order on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> Rule {
    assert!(order >= 1);
    if order == 1 {
        return Rule { nodes: vec![0.0], weights: vec![2.0] };
    }
    let diag = vec![0.0; order];
    let offdiag: Vec<f64> = (1..order)
        .map(|k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        })
        .collect();
    let tri = SymmetricTridiagonal::new(diag, offdiag);
    let (nodes, z) = tri.eigen_with_vectors().expect("Jacobi matrix is well conditioned");
    let weights = (0..order).map(|c| 2.0 * z[c] * z[c]).collect();
    Rule { nodes, weights }
}

/// Gauss-Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(order: usize, a: f64, b: f64) -> Rule {
    let base = gauss_legendre(order);
    scale_rule(&base, a, b)
}

fn scale_rule(base: &Rule, a: f64, b: f64) -> Rule {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    Rule {
        nodes: base.nodes.iter().map(|&x| mid + half * x).collect(),
        weights: base.weights.iter().map(|&w| half * w).collect(),
    }
}

/// Composite Gauss-Legendre rule: `[a, b]` split into panels of length at
/// most `max_panel`, each carrying an `order`-point rule.
pub fn panel_rule(a: f64, b: f64, max_panel: f64, order: usize) -> Rule {
    assert!(b > a && max_panel > 0.0);
    let panels = ((b - a) / max_panel).ceil().max(1.0) as usize;
    let base = gauss_legendre(order);
    let step = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * step;
        let scaled = scale_rule(&base, lo, lo + step);
        nodes.extend(scaled.nodes);
        weights.extend(scaled.weights);
    }
    Rule { nodes, weights }
}

/// Gauss-Hermite rule for the weight `exp(-x^2)`, returned in *modified*
/// form: the weights are `w_i exp(x_i^2)`, so the rule integrates plain
/// functions that already contain their gaussian decay,
/// `int F(x) dx ~= sum w~_i F(x_i)` (exact when `F = p(x) exp(-x^2)` with
/// `deg p < 2n`). This avoids the raw weights underflowing at large nodes.
pub fn gauss_hermite_modified(order: usize) -> Rule {
    assert!(order >= 1);
    let diag = vec![0.0; order];
    let offdiag: Vec<f64> = (1..order).map(|k| (k as f64 / 2.0).sqrt()).collect();
    let tri = SymmetricTridiagonal::new(diag, offdiag);
    let nodes = tri.eigenvalues().expect("Jacobi matrix is well conditioned");
    // Christoffel form: w_i e^{x_i^2} = 1 / sum_{j<n} phi_j(x_i)^2.
    let weights = nodes
        .iter()
        .map(|&x| {
            let phis = hermite::phi_all(order - 1, x);
            1.0 / phis.iter().map(|p| p * p).sum::<f64>()
        })
        .collect();
    Rule { nodes, weights }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn legendre_low_orders_match_tables() {
        let r = gauss_legendre(2);
        assert_abs_diff_eq!(r.nodes[1], 1.0 / 3.0f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(r.weights[0], 1.0, epsilon = 1e-14);
        let r3 = gauss_legendre(3);
        assert_abs_diff_eq!(r3.nodes[2], (3.0f64 / 5.0).sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(r3.weights[1], 8.0 / 9.0, epsilon = 1e-14);
    }

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let r = gauss_legendre_on(8, -2.0, 3.0);
        let got = r.integrate(|x| x.powi(15) - 4.0 * x.powi(3) + 1.0);
        let exact = (3.0f64.powi(16) - (-2.0f64).powi(16)) / 16.0 - (3.0f64.powi(4) - 16.0) + 5.0;
        assert_abs_diff_eq!(got, exact, epsilon = 1e-9 * exact.abs());
    }

    #[test]
    fn panels_integrate_oscillation() {
        let r = panel_rule(0.0, 20.0, 0.5, 16);
        let got = r.integrate(|x| (7.0 * x).sin());
        let exact = (1.0 - (140.0f64).cos()) / 7.0;
        assert_abs_diff_eq!(got, exact, epsilon = 1e-12);
    }

    #[test]
    fn hermite_moments() {
        let r = gauss_hermite_modified(20);
        let sqrt_pi = std::f64::consts::PI.sqrt();
        // int e^{-x^2} dx, int x^2 e^{-x^2} dx.
        assert_abs_diff_eq!(r.integrate(|x| (-x * x).exp()), sqrt_pi, epsilon = 1e-12);
        assert_abs_diff_eq!(
            r.integrate(|x| x * x * (-x * x).exp()),
            0.5 * sqrt_pi,
            epsilon = 1e-12
        );
    }

    #[test]
    fn hermite_large_order_orthonormality_spot() {
        let r = gauss_hermite_modified(400);
        // Highest node is near sqrt(2*400); weights stay O(1) in modified form.
        assert!(r.nodes[399] > 27.0 && r.nodes[399] < 29.0);
        for &(j, k) in &[(0usize, 0usize), (3, 3), (180, 180), (17, 50), (199, 200)] {
            let mut acc = 0.0;
            for (&x, &w) in r.nodes.iter().zip(&r.weights) {
                let phis = crate::hermite::phi_all(j.max(k), x);
                acc += w * phis[j] * phis[k];
            }
            let expect = if j == k { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(acc, expect, epsilon = 1e-11);
        }
    }
}
