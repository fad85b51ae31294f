use jtsupport_core::concentration::{
    check_moment_condition, check_tail_bounds, chernoff_maximizer, chernoff_rate, sample_v, upper_threshold,
};
use jtsupport_core::ensembles::{EnsembleKind, EnsembleSpec, Normalization};
use jtsupport_core::signal::{SparseSignal, Support};
use statrs::distribution::{ChiSquared, ContinuousCDF};

const TRIALS: usize = 100_000;

fn signal() -> SparseSignal {
    SparseSignal::new(20, Support::new((0..10).collect()).unwrap(), vec![1.0; 10]).unwrap()
}

fn gaussian() -> EnsembleSpec {
    EnsembleSpec::new(EnsembleKind::Gaussian, 0, Normalization::Raw)
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (mean, xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0))
}

#[test]
fn true_support_gives_centered_chi_square() {
    let x = signal();
    let vs = sample_v(gaussian(), &x, x.support(), 1.0, 100, TRIALS, 11).unwrap();
    assert_eq!(vs.gamma1, 90.0);
    assert_eq!(vs.samples.len(), TRIALS);
    let (mean, var) = mean_var(&vs.samples);
    assert!(mean.abs() < 3.0 * (180.0 / TRIALS as f64).sqrt(), "mean {mean}");
    assert!((var / 180.0 - 1.0).abs() < 0.05, "var {var}");

    // Exact chi-square tails sit under e^{-λ}, and so do the empirical ones.
    let chi = ChiSquared::new(90.0).unwrap();
    let lambdas = [0.5, 1.0, 2.0];
    for &l in &lambdas {
        assert!(chi.sf(upper_threshold(l, 90.0, 2.0) + 90.0) <= (-l).exp());
    }
    let report = check_tail_bounds(&vs, &lambdas).unwrap();
    assert_eq!(report.violations(), 0);

    let moments = check_moment_condition(&vs, &[-0.2, 0.0, 0.1, 0.3]).unwrap();
    assert_eq!(moments.violations(), 0);
    let at_neg = &moments.checks[0];
    assert!(at_neg.empirical <= 3.6);
    // Chi-square MGF oracle: −t(m−k) − ((m−k)/2) ln(1−2t).
    let exact = 0.2 * 90.0 - 45.0 * 1.4f64.ln();
    assert!((at_neg.empirical - exact).abs() < 3.0 * at_neg.se + 1e-3);
    assert_eq!(moments.checks[1].empirical, 0.0);
}

#[test]
fn disjoint_candidate_is_centered() {
    let x = SparseSignal::new(4, Support::new(vec![0]).unwrap(), vec![1.0]).unwrap();
    let vs = sample_v(gaussian(), &x, &Support::new(vec![2]).unwrap(), 1.0, 100, TRIALS, 5).unwrap();
    assert_eq!(vs.meta.sigma_y_sq, 2.0);
    let (mean, _) = mean_var(&vs.samples);
    assert!(mean.abs() < 3.0 * (2.0 * 99.0 / TRIALS as f64).sqrt(), "mean {mean}");
}

#[test]
fn chernoff_identity_on_grid() {
    for g1 in [1.0, 10.0, 90.0] {
        for g2 in [0.5, 1.0, 2.0] {
            for l in [0.1, 1.0, 5.0] {
                let eps = upper_threshold(l, g1, g2);
                let (t, g) = chernoff_rate(eps, g1, g2);
                assert!((g - l).abs() < 1e-8);
                let t_star = chernoff_maximizer(eps, g1, g2);
                let at_star = t_star * eps - g1 * t_star * t_star / (2.0 * (1.0 - g2 * t_star));
                assert!((at_star - g).abs() < 1e-8);
                assert!(t > 0.0 && t < 1.0 / g2);
            }
        }
    }
}
