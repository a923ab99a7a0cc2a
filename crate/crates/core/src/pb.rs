//! Poisson-binomial distributions: exact pmf by convolution plus the
//! analytic bounds used for determinantal counting statistics.

/// A sum of independent Bernoulli variables with the given means.
#[derive(Debug, Clone)]
pub struct PoissonBinomial {
    means: Vec<f64>,
}

/// Diagnostic record pairing each probability with its analytic bound.
#[derive(Debug, Clone, Copy)]
pub struct PbBounds {
    pub p_zero: f64,
    /// `exp(-sum lambda)`; always `>= p_zero`.
    pub bound_zero: f64,
    pub p_more_than_one: f64,
    /// `((sum lambda)^2 - sum lambda^2) / 2`; always `>= p_more_than_one`.
    pub bound_more_than_one: f64,
    pub sup_pmf: f64,
    /// `(sum lambda)^{-1/2}`, the anti-concentration scale.
    pub anticoncentration_scale: f64,
}

impl PoissonBinomial {
    pub fn new(means: Vec<f64>) -> Self {
        assert!(
            means.iter().all(|&l| (0.0..=1.0).contains(&l)),
            "Bernoulli means must lie in [0,1]"
        );
        PoissonBinomial { means }
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn mean(&self) -> f64 {
        self.means.iter().sum()
    }

    pub fn variance(&self) -> f64 {
        self.means.iter().map(|&l| l * (1.0 - l)).sum()
    }

    /// Exact pmf over `0..=n` by iterative convolution.
    pub fn pmf(&self) -> Vec<f64> {
        let mut p = vec![1.0f64];
        for &l in &self.means {
            let mut next = vec![0.0; p.len() + 1];
            for (k, &pk) in p.iter().enumerate() {
                next[k] += pk * (1.0 - l);
                next[k + 1] += pk * l;
            }
            p = next;
        }
        p
    }

    /// The probabilities and bounds of the Boolean-sum lemma; the two hard
    /// inequalities (zero-count and multi-count) are asserted.
    pub fn bounds(&self) -> PbBounds {
        let pmf = self.pmf();
        let mu = self.mean();
        let p_zero = pmf[0];
        let bound_zero = (-mu).exp();
        let p_more_than_one: f64 = pmf.iter().skip(2).sum();
        let sum_sq: f64 = self.means.iter().map(|&l| l * l).sum();
        let bound_more_than_one = 0.5 * (mu * mu - sum_sq);
        assert!(p_zero <= bound_zero + 1e-15, "zero-count bound violated");
        assert!(
            p_more_than_one <= bound_more_than_one + 1e-12,
            "multi-count bound violated"
        );
        let sup_pmf = pmf.iter().fold(0.0f64, |m, &p| m.max(p));
        PbBounds {
            p_zero,
            bound_zero,
            p_more_than_one,
            bound_more_than_one,
            sup_pmf,
            anticoncentration_scale: if mu > 0.0 { mu.powf(-0.5) } else { f64::INFINITY },
        }
    }

    /// Two-sided tail `P(|S - mean| >= t)` from the exact pmf.
    pub fn tail_two_sided(&self, t: f64) -> f64 {
        let mu = self.mean();
        self.pmf()
            .iter()
            .enumerate()
            .filter(|(k, _)| (*k as f64 - mu).abs() >= t)
            .map(|(_, &p)| p)
            .sum()
    }

    /// Bernstein bound `2 exp(-c min(t^2/var, t))` with `c = 1/8`.
    pub fn bernstein_bound(&self, t: f64) -> f64 {
        let var = self.variance();
        let arg = if var > 0.0 { (t * t / var).min(t) } else { t };
        2.0 * (-arg / 8.0).exp()
    }
}
