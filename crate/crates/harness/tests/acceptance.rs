//! Acceptance gate: one test per criterion, each printing a PASS/FAIL
//! line. Experiment-backed criteria run the real drivers at the stated
//! sizes; the library-level criteria (Hermite identities, eigensolver)
//! check the numerics directly.

use gue_minor_lab::config::ExperimentConfig;
use gue_minor_lab::report::{RunSummary, Verdict};
use minorlab::eigen::{backward_error, eigen_hermitian};
use minorlab::gue::{sample_gue_with, sample_tridiagonal_gue, trial_rng};
use minorlab::hermite::{phi, phi_all, phi_derivative};
use minorlab::quadrature::{gauss_hermite_modified, panel_rule};

fn config(n: Vec<usize>, trials: usize) -> ExperimentConfig {
    ExperimentConfig { n, trials, ..ExperimentConfig::default() }
}

fn run(experiment: &str, config: &ExperimentConfig) -> RunSummary {
    let dir = tempfile::tempdir().expect("tempdir");
    gue_minor_lab::run_in(experiment, config, dir.path()).expect("experiment run")
}

/// Assert that the named checks all passed, printing one line per check.
fn gate(criterion: &str, summary: &RunSummary, names: &[&str]) {
    let mut failed = Vec::new();
    for name in names {
        let check = summary
            .checks
            .iter()
            .find(|c| c.name == *name)
            .unwrap_or_else(|| panic!("missing check {name}"));
        println!(
            "[{criterion}] {name}: {} (estimate {:.6}) {}",
            check.verdict, check.estimate, check.detail
        );
        if check.verdict == Verdict::Fail {
            failed.push(*name);
        }
    }
    assert!(failed.is_empty(), "[{criterion}] failed checks: {failed:?}");
}

#[test]
fn criterion_01_poisson_binomial() {
    let summary = run("pb-lemma", &config(vec![400], 1000));
    gate(
        "criterion 1",
        &summary,
        &["pmf-enumeration", "zero-count-bound", "multi-count-bound", "bernstein-bound"],
    );
}

#[test]
fn criterion_02_hermite_identities() {
    // Orthonormality for all degrees up to 200 under the exact modified
    // Gauss-Hermite rule (degree 400 integrands need 201 nodes).
    let n_max = 200usize;
    let rule = gauss_hermite_modified(n_max + 1);
    let table: Vec<Vec<f64>> = rule.nodes.iter().map(|&x| phi_all(n_max, x)).collect();
    let mut worst = 0.0f64;
    for i in 0..=n_max {
        for j in i..=n_max {
            let g: f64 = rule
                .weights
                .iter()
                .zip(&table)
                .map(|(&w, phis)| w * phis[i] * phis[j])
                .sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - target).abs());
        }
    }
    println!("[criterion 2] orthonormality max deviation {worst:.3e}");
    assert!(worst < 1e-10, "orthonormality deviation {worst}");

    // Raising and lowering identities against a Richardson finite
    // difference of phi_n.
    let mut worst_ladder = 0.0f64;
    for n in [1usize, 5, 50, 150] {
        for k in -6i32..=6 {
            let x = 0.45 * k as f64;
            let h = 1e-5;
            let coarse = (phi(n, x + h) - phi(n, x - h)) / (2.0 * h);
            let fine = (phi(n, x + h / 2.0) - phi(n, x - h / 2.0)) / h;
            let deriv = (4.0 * fine - coarse) / 3.0;
            let lowering = (2.0 * n as f64).sqrt() * phi(n - 1, x) - x * phi(n, x);
            let raising = x * phi(n, x) - (2.0 * (n as f64 + 1.0)).sqrt() * phi(n + 1, x);
            worst_ladder = worst_ladder.max((deriv - lowering).abs());
            worst_ladder = worst_ladder.max((deriv - raising).abs());
        }
    }
    println!("[criterion 2] raising/lowering max residual {worst_ladder:.3e}");
    assert!(worst_ladder < 1e-6, "ladder residual {worst_ladder}");

    // Wronskian integral identity: 2(j-k) int_{-inf}^X phi_j phi_k
    // = [phi_j phi_k' - phi_j' phi_k](X), the tail at -inf vanishing.
    let mut worst_wronskian = 0.0f64;
    for (j, k) in [(3usize, 0usize), (12, 7), (40, 37)] {
        for x_cut in [-1.0, 0.5, 2.0] {
            let lo = -((2.0 * (j as f64 + 1.0)).sqrt() + 6.0);
            let quad = panel_rule(lo, x_cut, 0.25, 16)
                .integrate(|x| 2.0 * (j as f64 - k as f64) * phi(j, x) * phi(k, x));
            let wronskian =
                phi(j, x_cut) * phi_derivative(k, x_cut) - phi_derivative(j, x_cut) * phi(k, x_cut);
            worst_wronskian = worst_wronskian.max((quad - wronskian).abs());
        }
    }
    println!("[criterion 2] Wronskian integral identity max error {worst_wronskian:.3e}");
    assert!(worst_wronskian < 1e-6, "Wronskian identity error {worst_wronskian}");
}

#[test]
fn criterion_03_eigensolver() {
    let mut worst_rel = 0.0f64;
    for (which, n) in [50usize, 250, 800].into_iter().enumerate() {
        let h = sample_gue_with(n, &mut trial_rng(3, which as u64));
        let eig = eigen_hermitian(&h, true).expect("dense eigensolve");
        let rel = backward_error(&h, &eig) / h.frobenius_norm();
        worst_rel = worst_rel.max(rel);
    }
    println!("[criterion 3] max backward error / ||H||_F = {worst_rel:.3e} up to N = 800");
    assert!(worst_rel <= 1e-10, "backward error ratio {worst_rel}");

    // Sturm-bisection oracle against the QL spectrum at N = 20.
    let tri = sample_tridiagonal_gue(20, &mut trial_rng(3, 100));
    let ql = tri.eigenvalues().unwrap();
    let sturm = tri.eigenvalues_in_index_range(0, 20);
    let worst = ql
        .iter()
        .zip(&sturm)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    println!("[criterion 3] Sturm oracle max disagreement {worst:.3e} at N = 20");
    assert!(worst < 1e-8, "Sturm disagreement {worst}");
}

#[test]
fn criterion_04_gue_normalization() {
    let summary = run("semicircle", &config(vec![512], 10_000));
    gate("criterion 4", &summary, &["trace-moment", "semicircle-ks"]);
}

#[test]
fn criterion_05_schur_identity() {
    let summary = run("schur", &config(vec![50], 100));
    gate("criterion 5", &summary, &["schur-residual"]);
}

/// Criteria 6 and 7 share one dpp-consistency run.
fn dpp_summary() -> &'static RunSummary {
    static SUMMARY: std::sync::OnceLock<RunSummary> = std::sync::OnceLock::new();
    SUMMARY.get_or_init(|| run("dpp-consistency", &config(vec![400], 20_000)))
}

#[test]
fn criterion_06_counting_law() {
    gate("criterion 6", dpp_summary(), &["trace-mean", "number-variance-ratio"]);
}

#[test]
fn criterion_07_dpp_mixture() {
    gate("criterion 7", dpp_summary(), &["sine-cardinality-tv", "gue-counting-tv"]);
}

#[test]
fn criterion_08_gaudin_law() {
    let summary = run("gaudin-compare", &config(vec![400], 20_000));
    gate(
        "criterion 8",
        &summary,
        &[
            "density-sup-error",
            "density-normalization",
            "density-mean-quadrature",
            "mc-mean",
            "mass-route-agreement",
        ],
    );
}

#[test]
fn criterion_09_gap_bounds() {
    let summary = run("gaps", &config(vec![400], 20_000));
    gate(
        "criterion 9",
        &summary,
        &[
            "upper-tail-bound",
            "moment-scaling-slope",
            "lower-tail-bound",
            "window-variance-ratio",
            "window-variance-log-bound",
            "mean-gap",
        ],
    );
}

#[test]
fn criterion_10_universality() {
    let summary = run("universality", &config(vec![400], 20_000));
    gate(
        "criterion 10",
        &summary,
        &[
            "strict-interlacing",
            "gap-mean",
            "gap-second-moment",
            "igap-mean",
            "igap-capped-mean",
        ],
    );
}

#[test]
fn criterion_11_interlacing_variance() {
    let summary = run("interlacing-variance", &config(vec![400], 10_000));
    gate(
        "criterion 11",
        &summary,
        &["positive-interlacing-gaps", "variance-growth-slope", "alternating-cancellation"],
    );
}

#[test]
fn criterion_12_minor_kernel() {
    let mut cfg = config(vec![200], 3000);
    cfg.m = vec![8];
    let summary = run("minor-variance", &cfg);
    gate(
        "criterion 12",
        &summary,
        &[
            "ajk-dual-method",
            "ajk-envelope",
            "first-moment",
            "variance-formula",
            "f-integral-route-agreement",
        ],
    );
}

#[test]
fn criterion_13_reproducibility() {
    let mut cfg = config(vec![50], 64);
    cfg.workers = 1;
    let one = run("schur", &cfg);
    cfg.workers = 8;
    let eight = run("schur", &cfg);
    let identical = one.to_json() == eight.to_json();
    println!("[criterion 13] worker-count invariance: {}", if identical { "PASS" } else { "FAIL" });
    assert!(identical, "reports differ between 1 and 8 workers");
}
