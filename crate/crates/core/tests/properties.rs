use jtsupport_core::bounds::{
    cmac_sumrate_gaussian, converse_gaussian, error_exponent_floor, union_bound, AchievabilityInputs, ConverseInputs,
};
use jtsupport_core::decoder::{decode_exhaustive, DecodeMode, TypicalityParams};
use jtsupport_core::ensembles::{sample_matrix, EnsembleKind, EnsembleSpec, Normalization};
use jtsupport_core::linalg::{numerical_rank, residual_norm_sq, Matrix, DEFAULT_RANK_TOL};
use jtsupport_core::signal::{
    make_signal, metric_d1, metric_d2, metric_d3, observe, GainProfile, MagnitudeLaw, Metric, NoiseModel, SignLaw,
    SparseSignal, Support,
};
use proptest::prelude::*;

fn signal_and_candidate() -> impl Strategy<Value = (SparseSignal, Support)> {
    (2usize..12, any::<u64>(), any::<u64>()).prop_flat_map(|(n, s1, s2)| {
        (1..=n).prop_map(move |k| {
            let x = make_signal(n, k, MagnitudeLaw::Uniform(0.1, 3.0), SignLaw::Random, s1).unwrap();
            let j = make_signal(n, k, MagnitudeLaw::Fixed(1.0), SignLaw::Positive, s2).unwrap();
            (x, j.support().clone())
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exact_recovery_implies_the_weaker_metrics((x, j) in signal_and_candidate(), alpha in 0.01f64..0.99, eps in 0.01f64..0.99) {
        if metric_d1(&x, &j) {
            prop_assert!(metric_d2(&x, &j, alpha).unwrap());
            prop_assert!(metric_d3(&x, &j, eps).unwrap());
        }
        prop_assert!(metric_d1(&x, x.support()));
    }

    #[test]
    fn relaxed_metrics_are_monotone_in_overlap((x, j) in signal_and_candidate(), alpha in 0.01f64..0.99, eps in 0.01f64..0.99) {
        // Swap one wrong index of j for a missed true index.
        let missed = x.support().as_slice().iter().copied().find(|&i| !j.contains(i));
        let wrong = j.as_slice().iter().copied().find(|&i| !x.support().contains(i));
        if let (Some(add), Some(drop)) = (missed, wrong) {
            let mut v: Vec<usize> = j.as_slice().iter().copied().filter(|&i| i != drop).collect();
            v.push(add);
            let bigger = Support::from_unsorted(v);
            for metric in [Metric::d2(alpha).unwrap(), Metric::d3(eps).unwrap()] {
                prop_assert!(!metric.success(&x, &j) || metric.success(&x, &bigger));
            }
        }
    }

    #[test]
    fn rank_survives_column_permutation_and_sign_flips(seed in any::<u64>(), m in 2usize..9, k in 1usize..7, flips in any::<u8>()) {
        let a = sample_matrix(EnsembleSpec::new(EnsembleKind::Rademacher, seed, Normalization::Raw), m, k).unwrap();
        let r0 = numerical_rank(&a.body, DEFAULT_RANK_TOL).unwrap();
        let cols: Vec<Vec<f64>> = (0..k)
            .rev()
            .map(|c| {
                let s = if flips >> (c % 8) & 1 == 1 { -1.0 } else { 1.0 };
                a.column(c).iter().map(|v| s * v).collect()
            })
            .collect();
        let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
        let b = Matrix::from_columns(&refs).unwrap();
        prop_assert_eq!(numerical_rank(&b, DEFAULT_RANK_TOL).unwrap(), r0);
        prop_assert!(r0 <= m.min(k));
    }

    #[test]
    fn residual_lies_between_zero_and_norm(seed in any::<u64>(), m in 3usize..15, k in 1usize..3, y in prop::collection::vec(-5.0f64..5.0, 15)) {
        let a = sample_matrix(EnsembleSpec::new(EnsembleKind::Gaussian, seed, Normalization::UnitColumn), m, k).unwrap();
        let y = &y[..m];
        let r = residual_norm_sq(&a.body, y).unwrap();
        let norm: f64 = y.iter().map(|v| v * v).sum();
        prop_assert!(r >= 0.0 && r <= norm * (1.0 + 1e-12) + 1e-12);
        // A vector in the column space leaves nothing behind.
        let inside = a.body.mul_vec(&vec![1.0; k]).unwrap();
        prop_assert!(residual_norm_sq(&a.body, &inside).unwrap() < 1e-20 * (1.0 + norm));
    }

    #[test]
    fn column_relabeling_relabels_the_decode(seed in any::<u64>(), shift in 1usize..7) {
        let (n, k, m, sigma_sq) = (7, 2, 10, 0.05);
        let params = TypicalityParams::with_delta(0.05).unwrap();
        let x = make_signal(n, k, MagnitudeLaw::Fixed(1.0), SignLaw::Positive, seed).unwrap();
        let a = sample_matrix(EnsembleSpec::new(EnsembleKind::Gaussian, seed, Normalization::UnitColumn), m, n).unwrap();
        let y = observe(&a, &x, NoiseModel::new(sigma_sq).unwrap(), seed ^ 1).unwrap();
        let out = decode_exhaustive(&a, &y, k, sigma_sq, params, DecodeMode::Strict, 100).unwrap();

        // Column c of the relabeled matrix is column c - shift of the original.
        let perm = |c: usize| (c + shift) % n;
        let mut cols = vec![Vec::new(); n];
        for c in 0..n {
            cols[perm(c)] = a.column(c).to_vec();
        }
        let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
        let body = Matrix::from_columns(&refs).unwrap();
        let b = jtsupport_core::ensembles::MeasurementMatrix { body, spec: a.spec };
        let out2 = decode_exhaustive(&b, &y, k, sigma_sq, params, DecodeMode::Strict, 100).unwrap();
        let mut mapped: Vec<Support> = out
            .typical_sets
            .iter()
            .map(|s| Support::from_unsorted(s.as_slice().iter().map(|&c| perm(c)).collect()))
            .collect();
        mapped.sort();
        prop_assert_eq!(mapped, out2.typical_sets);
    }

    #[test]
    fn sum_rate_ignores_gain_order(mut gains in prop::collection::vec(0.01f64..10.0, 1..8), sigma_sq in 0.01f64..10.0) {
        let a = cmac_sumrate_gaussian(&GainProfile::new(gains.clone()).unwrap(), sigma_sq);
        gains.reverse();
        let b = cmac_sumrate_gaussian(&GainProfile::new(gains).unwrap(), sigma_sq);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn two_term_max_dominates(k in 1usize..20, extra in 1usize..500, gains in prop::collection::vec(0.01f64..5.0, 20), sigma_sq in 0.01f64..5.0) {
        let g = GainProfile::new(gains[..k].to_vec()).unwrap();
        let c = converse_gaussian(&ConverseInputs::new(k + extra, k, g, sigma_sq).unwrap());
        prop_assert!(c.two_term_max >= c.weakest_user && c.two_term_max >= c.sum_rate);
    }

    #[test]
    fn exponent_floor_decreases(m in 1usize..500, alpha in 0.01f64..5.0, sigma_sq in 0.01f64..5.0) {
        let f = error_exponent_floor(m, alpha, sigma_sq);
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!(error_exponent_floor(m + 1, alpha, sigma_sq) <= f);
        prop_assert!(error_exponent_floor(m, alpha * 1.5, sigma_sq) <= f);
    }

    #[test]
    fn union_bound_non_increasing_in_m(k in 1usize..6, extra in 1usize..30, m0 in 10usize..60, delta in 0.01f64..0.2) {
        let n = k + extra;
        let at = |m: usize| AchievabilityInputs { n, k, m, sigma_sq: 1.0, delta, mu: 1.0, energy: k as f64, c0: None };
        // Every floor must clear δ′ at the smallest m for monotonicity to hold.
        let m0 = m0.max(k + 1);
        prop_assume!(at(m0).delta_prime() < 0.1);
        for metric in [Metric::D1, Metric::d2(0.5).unwrap(), Metric::d3(0.5).unwrap()] {
            let lo = union_bound(&at(m0), metric).unwrap().total;
            let hi = union_bound(&at(m0 + 20), metric).unwrap().total;
            prop_assert!(hi <= lo * (1.0 + 1e-12), "{metric:?}: {hi} > {lo}");
        }
    }
}

#[test]
fn union_bound_is_finite_for_large_instances() {
    let inputs = AchievabilityInputs { n: 200, k: 40, m: 120, sigma_sq: 1.0, delta: 0.1, mu: 1.0, energy: 40.0, c0: Some(0.1) };
    for metric in [Metric::D1, Metric::d2(0.2).unwrap(), Metric::d3(0.2).unwrap()] {
        let u = union_bound(&inputs, metric).unwrap();
        assert!(u.total.is_finite() && u.ln_wrong_set_term.is_finite());
    }
}
