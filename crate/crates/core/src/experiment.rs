//! Monte Carlo evaluation of the decoder at one `(n, k, m)` point and the
//! comparison of its error rates against the closed-form bounds.
//!
//! Trials are pure functions of `(config, trial index)`, so callers may run
//! them in any order or in parallel and aggregate afterwards.

use alloc::vec::Vec;
#[allow(unused_imports)] // needed for f64 math under no_std
use num_traits::Float as _;

use crate::bounds::{
    converse_bernoulli, converse_gaussian, error_exponent_floor, union_bound, AchievabilityInputs, ConverseInputs,
};
use crate::decoder::{binomial, decode_exhaustive, DecodeMode, EventFlags, TypicalityParams};
use crate::ensembles::{sample_matrix, EnsembleSpec};
use crate::error::{param_err, Error, Result};
use crate::seed::{self, stream};
use crate::signal::{make_signal, observe, MagnitudeLaw, Metric, NoiseModel, SignLaw};

/// Everything needed to simulate one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PointConfig {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    /// Kind and normalization; the matrix seed is replaced per trial.
    pub ensemble: EnsembleSpec,
    pub sigma_sq: f64,
    pub params: TypicalityParams,
    pub alpha: f64,
    pub eps_energy: f64,
    pub magnitude: MagnitudeLaw,
    pub signs: SignLaw,
    pub trials: usize,
    /// Master seed; the point seed is derived from it and `(n, k, m)`.
    pub seed: u64,
    pub mode: DecodeMode,
    pub max_subsets: u64,
    /// Rank-failure exponent for the union bound, when known.
    pub c0: Option<f64>,
}

impl PointConfig {
    pub fn metrics(&self) -> Result<[Metric; 3]> {
        Ok([Metric::D1, Metric::d2(self.alpha)?, Metric::d3(self.eps_energy)?])
    }

    pub fn point_seed(&self) -> u64 {
        seed::point_seed(self.seed, self.n, self.k, self.m)
    }

    /// Parameter and budget checks done once before any trial runs.
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.n {
            return param_err(alloc::format!("need 1 <= k <= n, got k = {}, n = {}", self.k, self.n));
        }
        if self.m < self.k {
            return param_err(alloc::format!("need m >= k, got m = {}, k = {}", self.m, self.k));
        }
        if self.trials == 0 {
            return param_err("trials must be positive");
        }
        NoiseModel::new(self.sigma_sq)?;
        self.metrics()?;
        let count = binomial(self.n, self.k);
        if count > self.max_subsets as u128 {
            return Err(Error::Budget {
                n: self.n,
                k: self.k,
                count: count as f64,
                budget: self.max_subsets,
            });
        }
        Ok(())
    }
}

/// Outcome of one trial.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrialRecord {
    pub trial: u64,
    pub events: EventFlags,
    /// Success bits for d1, d2, d3.
    pub success: [bool; 3],
    /// Overlap `|I ∩ J|` of the decision. In strict mode there is no single
    /// decision, so this is the smallest overlap over all typical sets.
    pub overlap: Option<usize>,
    /// Union bound for this trial's signal, per metric; `None` when `m ≤ k`.
    pub union_bound: [Option<f64>; 3],
    pub exponent_floor: f64,
    pub alpha_k: f64,
    pub energy: f64,
}

/// Runs trial `trial` of `cfg`. Assumes `cfg.validate()` passed.
pub fn run_trial(cfg: &PointConfig, trial: u64) -> Result<TrialRecord> {
    let ts = seed::substream(cfg.point_seed(), trial);
    let x = make_signal(cfg.n, cfg.k, cfg.magnitude, cfg.signs, seed::substream(ts, stream::SIGNAL))?;
    let a = sample_matrix(cfg.ensemble.with_seed(seed::substream(ts, stream::MATRIX)), cfg.m, cfg.n)?;
    let noise = NoiseModel::new(cfg.sigma_sq)?;
    let y = observe(&a, &x, noise, seed::substream(ts, stream::NOISE))?;
    let outcome = decode_exhaustive(&a, &y, cfg.k, cfg.sigma_sq, cfg.params, cfg.mode, cfg.max_subsets)?;
    let metrics = cfg.metrics()?;
    let overlap = match &outcome.chosen {
        Some(j) => Some(x.support().overlap(j)),
        None => outcome.typical_sets.iter().map(|j| x.support().overlap(j)).min(),
    };
    let union = if cfg.m > cfg.k {
        let inputs = AchievabilityInputs::from_signal(&x, cfg.m, cfg.sigma_sq, cfg.params.delta, cfg.c0);
        let mut out = [None; 3];
        for (slot, metric) in out.iter_mut().zip(metrics) {
            *slot = Some(union_bound(&inputs, metric)?.total);
        }
        out
    } else {
        [None; 3]
    };
    let alpha_k = x.min_magnitude();
    Ok(TrialRecord {
        trial,
        events: outcome.events(x.support()),
        success: metrics.map(|metric| outcome.success(&x, metric)),
        overlap,
        union_bound: union,
        exponent_floor: error_exponent_floor(cfg.m, alpha_k, cfg.sigma_sq),
        alpha_k,
        energy: x.energy(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricSummary {
    pub metric: Metric,
    pub successes: usize,
    pub err_rate: f64,
    /// `√(p̂(1−p̂)/trials)`.
    pub se: f64,
    /// Mean over trials of the per-signal union bound.
    pub union_bound: Option<f64>,
    /// Set when the union bound is at least 1 or undefined.
    pub vacuous: bool,
}

/// Aggregate of all trials at one point.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PointSummary {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub sigma_sq: f64,
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    pub mode: DecodeMode,
    pub metrics: [MetricSummary; 3],
    pub omega0_rate: f64,
    pub omega_ic_rate: f64,
    pub omega_j_rate: f64,
    /// Rate of `Ω₀ ∪ Ω_I^c ∪ Ω_J`.
    pub any_event_rate: f64,
    pub mean_exponent_floor: f64,
}

pub fn binomial_se(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

fn rate(count: usize, trials: usize) -> f64 {
    count as f64 / trials as f64
}

/// Folds trial records into a summary. Records must be in trial order for
/// the floating-point means to be reproducible bit for bit.
pub fn summarize(cfg: &PointConfig, records: &[TrialRecord]) -> Result<PointSummary> {
    let t = records.len();
    if t == 0 {
        return param_err("no trial records");
    }
    let metrics = cfg.metrics()?;
    let count = |f: &dyn Fn(&TrialRecord) -> bool| records.iter().filter(|r| f(r)).count();
    let summaries = core::array::from_fn(|i| {
        let successes = count(&|r| r.success[i]);
        let err_rate = rate(t - successes, t);
        let union_bound = records
            .iter()
            .map(|r| r.union_bound[i])
            .sum::<Option<f64>>()
            .map(|s| s / t as f64);
        MetricSummary {
            metric: metrics[i],
            successes,
            err_rate,
            se: binomial_se(err_rate, t),
            union_bound,
            vacuous: union_bound.is_none_or(|u| u >= 1.0),
        }
    });
    Ok(PointSummary {
        n: cfg.n,
        k: cfg.k,
        m: cfg.m,
        sigma_sq: cfg.sigma_sq,
        delta: cfg.params.delta,
        trials: t,
        seed: cfg.seed,
        mode: cfg.mode,
        metrics: summaries,
        omega0_rate: rate(count(&|r| r.events.omega0), t),
        omega_ic_rate: rate(count(&|r| r.events.omega_i_complement), t),
        omega_j_rate: rate(count(&|r| r.events.omega_j_fired), t),
        any_event_rate: rate(count(&|r| r.events.any()), t),
        mean_exponent_floor: records.iter().map(|r| r.exponent_floor).sum::<f64>() / t as f64,
    })
}

/// Runs every trial of `cfg` sequentially.
pub fn run_point(cfg: &PointConfig) -> Result<(PointSummary, Vec<TrialRecord>)> {
    cfg.validate()?;
    let records = (0..cfg.trials as u64)
        .map(|t| run_trial(cfg, t))
        .collect::<Result<Vec<_>>>()?;
    Ok((summarize(cfg, &records)?, records))
}

/// One row of the bound-versus-empirical table.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComparisonRow {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub metric: Metric,
    pub err_rate: f64,
    pub se: f64,
    pub union_bound: Option<f64>,
    pub vacuous: bool,
    /// Gaussian-ensemble `m` floor, `max(weakest-user, sum-rate)`, averaged
    /// over the simulated signals.
    pub converse_gaussian: f64,
    /// Refined single-user `m` floor, averaged the same way.
    pub converse_gaussian_refined: f64,
    pub converse_bernoulli: Option<f64>,
    /// Mean of `exp(−E₀(α_k, σ²) m)` over the simulated signals.
    pub exponent_floor: f64,
    /// Empirical error exceeds the union bound by more than 3 SE.
    pub above_union_bound: bool,
    /// Empirical error falls below the exponent floor by more than 3 SE.
    pub below_exponent_floor: bool,
}

pub fn compare_bounds(cfg: &PointConfig, summary: &PointSummary, records: &[TrialRecord]) -> Result<Vec<ComparisonRow>> {
    if records.is_empty() {
        return param_err("no trial records");
    }
    let t = records.len() as f64;
    let (mut gauss, mut refined) = (0.0, 0.0);
    for r in records {
        // Per-trial gains only enter through α_k and the energy; a profile
        // with those two statistics gives the same converse values.
        let gains = two_stat_profile(cfg.k, r.alpha_k, r.energy)?;
        let c = converse_gaussian(&ConverseInputs::new(cfg.n, cfg.k, gains, cfg.sigma_sq)?);
        gauss += c.two_term_max;
        refined += c.refined_single_user;
    }
    let bernoulli = converse_bernoulli(cfg.n, cfg.k).ok();
    Ok(summary
        .metrics
        .iter()
        .map(|ms| ComparisonRow {
            n: cfg.n,
            k: cfg.k,
            m: cfg.m,
            metric: ms.metric,
            err_rate: ms.err_rate,
            se: ms.se,
            union_bound: ms.union_bound,
            vacuous: ms.vacuous,
            converse_gaussian: gauss / t,
            converse_gaussian_refined: refined / t,
            converse_bernoulli: bernoulli,
            exponent_floor: summary.mean_exponent_floor,
            above_union_bound: ms.union_bound.is_some_and(|u| ms.err_rate > u + 3.0 * ms.se),
            below_exponent_floor: ms.err_rate < summary.mean_exponent_floor - 3.0 * ms.se,
        })
        .collect())
}

/// Gain profile with smallest entry `alpha_k` and total energy `energy`.
fn two_stat_profile(k: usize, alpha_k: f64, energy: f64) -> Result<crate::signal::GainProfile> {
    let mut gains = alloc::vec![alpha_k; k];
    if k > 1 {
        let rest = (energy - alpha_k * alpha_k).max(0.0) / (k - 1) as f64;
        for g in gains.iter_mut().take(k - 1) {
            *g = rest.sqrt().max(alpha_k);
        }
    }
    crate::signal::GainProfile::new(gains)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{EnsembleKind, Normalization};

    fn config(n: usize, k: usize, m: usize, sigma_sq: f64, delta: f64, trials: usize) -> PointConfig {
        PointConfig {
            n,
            k,
            m,
            ensemble: EnsembleSpec::new(EnsembleKind::Gaussian, 0, Normalization::UnitColumn),
            sigma_sq,
            params: TypicalityParams::with_delta(delta).unwrap(),
            alpha: 0.4,
            eps_energy: 0.4,
            magnitude: MagnitudeLaw::Fixed(1.0),
            signs: SignLaw::Positive,
            trials,
            seed: 17,
            mode: DecodeMode::Strict,
            max_subsets: 1_000_000,
            c0: None,
        }
    }

    #[test]
    fn single_trial_is_reproducible() {
        let cfg = config(6, 2, 12, 0.001, 0.01, 1);
        let a = run_point(&cfg).unwrap();
        let b = run_point(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn strict_error_equals_event_rate() {
        let cfg = config(8, 2, 10, 0.05, 0.02, 200);
        let (s, records) = run_point(&cfg).unwrap();
        assert_eq!(s.metrics[0].err_rate, s.any_event_rate);
        for r in &records {
            assert_eq!(!r.success[0], r.events.any());
            if r.success[0] {
                assert!(r.success[1] && r.success[2]);
            }
        }
    }

    #[test]
    fn first_unique_never_worse_for_d1() {
        let strict = config(8, 2, 10, 0.05, 0.02, 200);
        let unique = PointConfig { mode: DecodeMode::FirstUnique, ..strict };
        let (s, _) = run_point(&strict).unwrap();
        let (u, _) = run_point(&unique).unwrap();
        assert!(s.metrics[0].err_rate >= u.metrics[0].err_rate);
    }

    #[test]
    fn budget_is_checked_before_running() {
        let cfg = PointConfig { max_subsets: 10, ..config(10, 3, 12, 1.0, 0.1, 5) };
        assert!(matches!(run_point(&cfg), Err(Error::Budget { budget: 10, .. })));
    }

    #[test]
    fn square_point_has_no_union_bound() {
        let cfg = config(5, 2, 2, 1.0, 0.1, 3);
        let (s, _) = run_point(&cfg).unwrap();
        assert!(s.metrics.iter().all(|m| m.union_bound.is_none() && m.vacuous));
    }

    #[test]
    fn two_stat_profile_preserves_converse_inputs() {
        let g = two_stat_profile(3, 1.0, 9.0).unwrap();
        assert_eq!(g.alpha_k(), 1.0);
        assert!((g.energy() - 9.0).abs() < 1e-12);
    }
}
