//! Empirical checks of the concentration machinery behind the wrong-support
//! bound.
//!
//! For a candidate `J` with `|J| = k` the statistic is
//! `V = ‖Π⊥_{A_J} y‖²/σ_y² − (m−k)` with `σ_y² = Σ_{I∖J} x_i² + σ²`. Under a
//! subgaussian ensemble it should obey the moment condition
//! `ln E e^{tV} ≤ −γ₁t − (γ₁/2) ln(1 − γ₂t)` with `γ₁ = m−k`, `γ₂ = 2`, and
//! hence the Chernoff tails
//! `Pr(V ≥ γ₂λ + √(2γ₁λ)) ≤ e^{−λ}` and `Pr(V ≤ −√(2γ₁λ)) ≤ e^{−λ}`.
//!
//! V is only defined when `rank(A_J) = k`; rank-deficient draws are counted
//! and dropped.

use alloc::vec::Vec;
#[allow(unused_imports)] // needed for f64 math under no_std
use num_traits::Float as _;
use rand::Rng;

use crate::ensembles::{sample_matrix, EnsembleSpec};
use crate::error::{param_err, Result};
use crate::linalg::{axpy, Qr, DEFAULT_RANK_TOL};
use crate::seed::{self, stream};
use crate::signal::{NoiseModel, SparseSignal, Support};

/// Smallest sample count for which `λ ≤ 5` is considered resolvable.
pub const MIN_TAIL_SAMPLES: usize = 10_000;
const BOOTSTRAP_RESAMPLES: usize = 200;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VMeta {
    pub ensemble: EnsembleSpec,
    pub m: usize,
    pub k: usize,
    /// `|I ∩ J|`.
    pub overlap: usize,
    pub sigma_sq: f64,
    pub sigma_y_sq: f64,
    pub trials: usize,
    pub rank_deficient: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VSampleSet {
    pub gamma1: f64,
    pub gamma2: f64,
    pub samples: Vec<f64>,
    pub meta: VMeta,
}

/// Draws of `V` for a fixed signal and candidate, one fresh `(A, z)` per trial.
#[derive(Debug, Clone)]
pub struct VSampler {
    spec: EnsembleSpec,
    m: usize,
    noise: NoiseModel,
    /// Columns touched by `I ∪ J`, in sampling order.
    columns: Vec<usize>,
    /// Positions within `columns` of the signal entries and of `J`.
    signal_pos: Vec<(usize, f64)>,
    candidate_pos: Vec<usize>,
    sigma_y_sq: f64,
    overlap: usize,
    seed: u64,
}

impl VSampler {
    pub fn new(spec: EnsembleSpec, x: &SparseSignal, j: &Support, sigma_sq: f64, m: usize, seed: u64) -> Result<Self> {
        let k = x.k();
        if j.len() != k {
            return param_err(alloc::format!("|J| = {} but |I| = {k}", j.len()));
        }
        if j.max_index().is_some_and(|i| i >= x.n()) {
            return param_err("candidate index out of range");
        }
        if m < k {
            return param_err(alloc::format!("m = {m} is below k = {k}"));
        }
        let noise = NoiseModel::new(sigma_sq)?;
        let mut columns: Vec<usize> = x.support().as_slice().iter().chain(j.as_slice()).copied().collect();
        columns.sort_unstable();
        columns.dedup();
        let pos = |i: usize| columns.binary_search(&i).expect("column present");
        let signal_pos = x.entries().map(|(i, v)| (pos(i), v)).collect();
        let candidate_pos = j.as_slice().iter().map(|&i| pos(i)).collect();
        let missed: f64 = x.entries().filter(|(i, _)| !j.contains(*i)).map(|(_, v)| v * v).sum();
        Ok(Self {
            spec,
            m,
            noise,
            signal_pos,
            candidate_pos,
            sigma_y_sq: missed + sigma_sq,
            overlap: x.support().overlap(j),
            columns,
            seed,
        })
    }

    pub fn k(&self) -> usize {
        self.candidate_pos.len()
    }

    pub fn sigma_y_sq(&self) -> f64 {
        self.sigma_y_sq
    }

    /// `V` for trial `trial`, or `None` when `A_J` is rank deficient.
    pub fn draw(&self, trial: u64) -> Result<Option<f64>> {
        let trial_seed = seed::substream(self.seed, trial);
        let a = sample_matrix(
            self.spec.with_seed(seed::substream(trial_seed, stream::MATRIX)),
            self.m,
            self.columns.len(),
        )?;
        let mut y = self.noise.sample(self.m, seed::substream(trial_seed, stream::NOISE));
        for &(p, v) in &self.signal_pos {
            axpy(v, a.column(p), &mut y);
        }
        let qr = Qr::from_columns(self.m, self.candidate_pos.iter().map(|&p| a.column(p)))?;
        if qr.rank(DEFAULT_RANK_TOL) < self.k() {
            return Ok(None);
        }
        let residual = qr.residual_norm_sq(&y)?;
        Ok(Some(residual / self.sigma_y_sq - (self.m - self.k()) as f64))
    }

    /// Packs externally generated draws (e.g. from a parallel runner).
    pub fn collect(&self, draws: impl IntoIterator<Item = Option<f64>>) -> VSampleSet {
        let mut samples = Vec::new();
        let mut trials = 0;
        for d in draws {
            trials += 1;
            if let Some(v) = d {
                samples.push(v);
            }
        }
        VSampleSet {
            gamma1: (self.m - self.k()) as f64,
            gamma2: 2.0,
            meta: VMeta {
                ensemble: self.spec,
                m: self.m,
                k: self.k(),
                overlap: self.overlap,
                sigma_sq: self.noise.sigma_sq(),
                sigma_y_sq: self.sigma_y_sq,
                trials,
                rank_deficient: trials - samples.len(),
                seed: self.seed,
            },
            samples,
        }
    }
}

/// `trials` draws of `V` with `γ₁ = m−k`, `γ₂ = 2`.
pub fn sample_v(
    spec: EnsembleSpec,
    x: &SparseSignal,
    j: &Support,
    sigma_sq: f64,
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<VSampleSet> {
    if trials < 1_000 {
        return param_err("V sampling needs at least 10^3 trials");
    }
    let sampler = VSampler::new(spec, x, j, sigma_sq, m, seed)?;
    let draws = (0..trials as u64).map(|t| sampler.draw(t)).collect::<Result<Vec<_>>>()?;
    Ok(sampler.collect(draws))
}

/// `γ₂λ + √(2γ₁λ)`.
pub fn upper_threshold(lambda: f64, gamma1: f64, gamma2: f64) -> f64 {
    gamma2 * lambda + (2.0 * gamma1 * lambda).sqrt()
}

/// `−√(2γ₁λ)`.
pub fn lower_threshold(lambda: f64, gamma1: f64) -> f64 {
    -(2.0 * gamma1 * lambda).sqrt()
}

fn exceeds_with_tolerance(empirical: f64, bound: f64, samples: usize) -> bool {
    empirical > bound + 3.0 * (bound / samples as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TailCheck {
    pub lambda: f64,
    pub upper_threshold: f64,
    pub lower_threshold: f64,
    pub upper_frequency: f64,
    pub lower_frequency: f64,
    /// `e^{−λ}`.
    pub bound: f64,
    /// False when the sample is too small to resolve `e^{−λ}`.
    pub resolvable: bool,
    pub upper_violation: bool,
    pub lower_violation: bool,
}

impl TailCheck {
    pub fn violated(&self) -> bool {
        self.upper_violation || self.lower_violation
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TailReport {
    pub samples: usize,
    pub checks: Vec<TailCheck>,
}

impl TailReport {
    pub fn violations(&self) -> usize {
        self.checks.iter().filter(|c| c.violated()).count()
    }
}

/// A `λ` is resolvable when the expected count at the bound, `n·e^{−λ}`, is
/// at least what `10⁴` samples give at `λ = 5`.
fn resolvable(samples: usize, lambda: f64) -> bool {
    samples as f64 * (-lambda).exp() >= MIN_TAIL_SAMPLES as f64 * (-5.0f64).exp()
}

/// Empirical Chernoff tails of `V` against `e^{−λ}`, with 3 binomial standard
/// errors of slack.
pub fn check_tail_bounds(vs: &VSampleSet, lambda_grid: &[f64]) -> Result<TailReport> {
    if lambda_grid.is_empty() {
        return param_err("empty lambda grid");
    }
    if lambda_grid.iter().any(|l| !(*l > 0.0)) {
        return param_err("lambda values must be positive");
    }
    let n = vs.samples.len();
    let checks = lambda_grid
        .iter()
        .map(|&lambda| {
            let upper = upper_threshold(lambda, vs.gamma1, vs.gamma2);
            let lower = lower_threshold(lambda, vs.gamma1);
            let frac = |pred: &dyn Fn(f64) -> bool| {
                if n == 0 {
                    0.0
                } else {
                    vs.samples.iter().filter(|&&v| pred(v)).count() as f64 / n as f64
                }
            };
            let upper_frequency = frac(&|v| v >= upper);
            let lower_frequency = frac(&|v| v <= lower);
            let bound = (-lambda).exp();
            let ok = resolvable(n, lambda);
            TailCheck {
                lambda,
                upper_threshold: upper,
                lower_threshold: lower,
                upper_frequency,
                lower_frequency,
                bound,
                resolvable: ok,
                upper_violation: ok && exceeds_with_tolerance(upper_frequency, bound, n),
                lower_violation: ok && exceeds_with_tolerance(lower_frequency, bound, n),
            }
        })
        .collect();
    Ok(TailReport { samples: n, checks })
}

/// `−γ₁t − (γ₁/2) ln(1 − γ₂t)`.
pub fn moment_bound(t: f64, gamma1: f64, gamma2: f64) -> f64 {
    -gamma1 * t - gamma1 / 2.0 * (-gamma2 * t).ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MomentCheck {
    pub t: f64,
    /// `ln( (1/n) Σ e^{tV} )`.
    pub empirical: f64,
    /// Bootstrap standard error of `empirical`.
    pub se: f64,
    pub bound: f64,
    /// `γ₁t²`, only for `t < 0`.
    pub quadratic_bound: Option<f64>,
    pub violation: bool,
    pub quadratic_violation: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MomentReport {
    pub samples: usize,
    pub checks: Vec<MomentCheck>,
}

impl MomentReport {
    pub fn violations(&self) -> usize {
        self.checks
            .iter()
            .filter(|c| c.violation || c.quadratic_violation)
            .count()
    }
}

fn log_mean_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let top = values.clone().fold(f64::NEG_INFINITY, f64::max);
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + (v - top).exp(), n + 1));
    top + (sum / n as f64).ln()
}

/// Empirical log-MGF of `V` against the moment condition, with 3 bootstrap
/// standard errors of slack.
pub fn check_moment_condition(vs: &VSampleSet, t_grid: &[f64]) -> Result<MomentReport> {
    if t_grid.is_empty() {
        return param_err("empty t grid");
    }
    let limit = 1.0 / vs.gamma2;
    if let Some(t) = t_grid.iter().find(|t| !(t.abs() < limit)) {
        return param_err(alloc::format!("t = {t} outside (-1/gamma2, 1/gamma2)"));
    }
    let n = vs.samples.len();
    if n < MIN_TAIL_SAMPLES {
        return param_err("moment check needs at least 10^4 samples");
    }
    let mut rng = seed::rng(seed::substream(vs.meta.seed, 0x6d6f_6d65_6e74));
    let resamples: Vec<Vec<u32>> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| (0..n).map(|_| rng.random_range(0..n as u32)).collect())
        .collect();
    let checks = t_grid
        .iter()
        .map(|&t| {
            let tv: Vec<f64> = vs.samples.iter().map(|v| t * v).collect();
            let empirical = log_mean_exp(tv.iter().copied());
            let boots: Vec<f64> = resamples
                .iter()
                .map(|idx| log_mean_exp(idx.iter().map(|&i| tv[i as usize])))
                .collect();
            let mean = boots.iter().sum::<f64>() / boots.len() as f64;
            let se = (boots.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (boots.len() - 1) as f64).sqrt();
            let bound = moment_bound(t, vs.gamma1, vs.gamma2);
            let quadratic_bound = (t < 0.0).then_some(vs.gamma1 * t * t);
            MomentCheck {
                t,
                empirical,
                se,
                bound,
                quadratic_bound,
                violation: empirical > bound + 3.0 * se,
                quadratic_violation: quadratic_bound.is_some_and(|q| empirical > q + 3.0 * se),
            }
        })
        .collect();
    Ok(MomentReport { samples: n, checks })
}

/// `tε − γ₁t²/(2(1−γ₂t))`, the Chernoff exponent at `t`.
pub fn chernoff_objective(t: f64, eps: f64, gamma1: f64, gamma2: f64) -> f64 {
    t * eps - gamma1 * t * t / (2.0 * (1.0 - gamma2 * t))
}

/// Closed-form maximizer `γ₂⁻¹[1 − √γ₁ (2εγ₂ + γ₁)^{−1/2}]`.
pub fn chernoff_maximizer(eps: f64, gamma1: f64, gamma2: f64) -> f64 {
    (1.0 - gamma1.sqrt() / (2.0 * eps * gamma2 + gamma1).sqrt()) / gamma2
}

/// `g(ε) = sup_{0<t<1/γ₂} (tε − γ₁t²/(2(1−γ₂t)))` by golden-section search.
///
/// Returns `(argmax, max)`.
pub fn chernoff_rate(eps: f64, gamma1: f64, gamma2: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let f = |t: f64| chernoff_objective(t, eps, gamma1, gamma2);
    let (mut lo, mut hi) = (0.0, (1.0 - 1e-15) / gamma2);
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if hi - lo <= 1e-15 * hi.max(1e-300) {
            break;
        }
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    let t = 0.5 * (lo + hi);
    (t, f(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{EnsembleKind, Normalization};
    use alloc::vec;

    fn raw(kind: EnsembleKind) -> EnsembleSpec {
        EnsembleSpec::new(kind, 9, Normalization::Raw)
    }

    fn sup(v: &[usize]) -> Support {
        Support::new(v.to_vec()).unwrap()
    }

    #[test]
    fn thresholds_at_unit_lambda() {
        assert!((upper_threshold(1.0, 90.0, 2.0) - (2.0 + 180f64.sqrt())).abs() < 1e-14);
        assert!((upper_threshold(1.0, 90.0, 2.0) - 15.4164).abs() < 1e-4);
        assert!((lower_threshold(1.0, 90.0) + 180f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn moment_bound_values() {
        assert_eq!(moment_bound(0.0, 90.0, 2.0), 0.0);
        let v = moment_bound(0.1, 90.0, 2.0);
        assert!((v - (-9.0 - 45.0 * 0.8f64.ln())).abs() < 1e-12);
        assert!((v - 1.041_46).abs() < 1e-5);
    }

    #[test]
    fn maximizer_matches_search() {
        for &(g1, g2, lambda) in &[(90.0, 2.0, 1.0), (1.0, 0.5, 0.1), (10.0, 1.0, 5.0)] {
            let eps = upper_threshold(lambda, g1, g2);
            let (t, g) = chernoff_rate(eps, g1, g2);
            assert!((g - lambda).abs() < 1e-8, "{g} vs {lambda}");
            assert!((t - chernoff_maximizer(eps, g1, g2)).abs() < 1e-6);
        }
    }

    #[test]
    fn square_system_gives_zero_v() {
        let x = SparseSignal::new(4, sup(&[0, 1]), vec![1.0, -1.0]).unwrap();
        let vs = sample_v(raw(EnsembleKind::Gaussian), &x, &sup(&[0, 1]), 1.0, 2, 1_000, 3).unwrap();
        assert_eq!(vs.gamma1, 0.0);
        assert!(vs.samples.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn disjoint_candidate_has_inflated_sigma_y() {
        let x = SparseSignal::new(4, sup(&[0]), vec![1.0]).unwrap();
        let s = VSampler::new(raw(EnsembleKind::Gaussian), &x, &sup(&[2]), 1.0, 30, 0).unwrap();
        assert_eq!(s.sigma_y_sq(), 2.0);
        let s = VSampler::new(raw(EnsembleKind::Gaussian), &x, &sup(&[0]), 1.0, 30, 0).unwrap();
        assert_eq!(s.sigma_y_sq(), 1.0);
    }

    #[test]
    fn rank_deficient_draws_are_dropped() {
        // Two ±1 columns of length 2 coincide up to sign half the time.
        let x = SparseSignal::new(3, sup(&[0, 1]), vec![1.0, 1.0]).unwrap();
        let vs = sample_v(raw(EnsembleKind::Rademacher), &x, &sup(&[0, 1]), 1.0, 2, 2_000, 5).unwrap();
        assert_eq!(vs.meta.trials, 2_000);
        assert_eq!(vs.meta.rank_deficient + vs.samples.len(), 2_000);
        assert!(vs.meta.rank_deficient > 800 && vs.meta.rank_deficient < 1200);
    }

    #[test]
    fn parameter_errors() {
        let x = SparseSignal::new(4, sup(&[0, 1]), vec![1.0, 1.0]).unwrap();
        let g = raw(EnsembleKind::Gaussian);
        assert!(sample_v(g, &x, &sup(&[0]), 1.0, 10, 1_000, 0).is_err());
        assert!(sample_v(g, &x, &sup(&[0, 1]), 1.0, 1, 1_000, 0).is_err());
        assert!(sample_v(g, &x, &sup(&[0, 1]), 1.0, 10, 10, 0).is_err());
        let vs = sample_v(g, &x, &sup(&[0, 1]), 1.0, 10, 1_000, 0).unwrap();
        assert!(check_tail_bounds(&vs, &[]).is_err());
        assert!(check_moment_condition(&vs, &[0.1]).is_err());
    }

    #[test]
    fn tiny_lambda_never_violates() {
        let x = SparseSignal::new(4, sup(&[0, 1]), vec![1.0, 1.0]).unwrap();
        let vs = sample_v(raw(EnsembleKind::Gaussian), &x, &sup(&[0, 1]), 1.0, 20, 1_000, 0).unwrap();
        let r = check_tail_bounds(&vs, &[1e-9]).unwrap();
        assert!(r.checks[0].bound > 0.999);
        assert!(r.checks[0].upper_threshold < 1e-3);
        assert_eq!(r.violations(), 0);
    }

    #[test]
    fn small_samples_mark_large_lambda_unresolvable() {
        let x = SparseSignal::new(4, sup(&[0, 1]), vec![1.0, 1.0]).unwrap();
        let vs = sample_v(raw(EnsembleKind::Gaussian), &x, &sup(&[0, 1]), 1.0, 20, 1_000, 0).unwrap();
        let r = check_tail_bounds(&vs, &[1.0, 3.0]).unwrap();
        assert!(r.checks[0].resolvable);
        assert!(!r.checks[1].resolvable);
    }
}
