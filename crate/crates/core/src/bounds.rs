//! Closed-form achievability and converse bounds.
//!
//! Rates are in nats unless a function says otherwise. The Gaussian converse
//! terms are ratios of logarithms and are evaluated in base 2, where powers
//! of two come out exact; the Bernoulli bound is base 2 by definition.

use alloc::vec::Vec;
#[allow(unused_imports)] // needed for f64 math under no_std
use num_traits::Float as _;

use crate::error::{param_err, Result};
use crate::signal::{GainProfile, Metric, SparseSignal};

/// `α_k²/σ²` below which the low-SNR converse is considered valid.
pub const LOW_SNR_THRESHOLD: f64 = 0.1;

/// `ln C(n, k)`, accumulated term by term; `-inf` when `k > n`.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64 / (i + 1) as f64).ln()).sum()
}

/// `ln Σ exp(xs)`, `-inf` for an empty or all-`-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let top = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + xs.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}

pub fn nats_to_bits(nats: f64) -> f64 {
    nats / core::f64::consts::LN_2
}

/// Parameters of the achievability bound for one signal.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AchievabilityInputs {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub sigma_sq: f64,
    pub delta: f64,
    /// Smallest nonzero magnitude `μ(x)`.
    pub mu: f64,
    /// Signal energy `P`.
    pub energy: f64,
    /// Exponent of the rank-failure term `exp(−c₀m)`, if known.
    pub c0: Option<f64>,
}

impl AchievabilityInputs {
    pub fn from_signal(x: &SparseSignal, m: usize, sigma_sq: f64, delta: f64, c0: Option<f64>) -> Self {
        Self {
            n: x.n(),
            k: x.k(),
            m,
            sigma_sq,
            delta,
            mu: x.min_magnitude(),
            energy: x.energy(),
            c0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.n {
            return param_err("need 1 <= k <= n");
        }
        if self.m <= self.k {
            return param_err(alloc::format!("bound needs m > k (m = {}, k = {})", self.m, self.k));
        }
        if !(self.sigma_sq > 0.0) || !(self.delta > 0.0) {
            return param_err("sigma_sq and delta must be positive");
        }
        if !(self.mu > 0.0) || !(self.energy > 0.0) {
            return param_err("signal magnitudes must be positive");
        }
        if self.c0.is_some_and(|c| !(c > 0.0)) {
            return param_err("c0 must be positive");
        }
        Ok(())
    }

    /// `δ′ = δm/(m−k)`.
    pub fn delta_prime(&self) -> f64 {
        delta_prime(self.m, self.k, self.delta)
    }
}

fn delta_prime(m: usize, k: usize, delta: f64) -> f64 {
    delta * m as f64 / (m - k) as f64
}

/// Exponent of the atypical-truth bound: `(δ²/4σ⁴)·m²/(m−k+2δm/σ²)`.
fn atypical_exponent(m: usize, k: usize, sigma_sq: f64, delta: f64) -> f64 {
    let mf = m as f64;
    delta * delta / (4.0 * sigma_sq * sigma_sq) * mf * mf / ((m - k) as f64 + 2.0 * delta / sigma_sq * mf)
}

/// Bound on `Pr(Ω_I^c)`; lies in `(0, 2]`.
pub fn prob_atypical_bound(inputs: &AchievabilityInputs) -> Result<f64> {
    inputs.validate()?;
    Ok(2.0 * (-atypical_exponent(inputs.m, inputs.k, inputs.sigma_sq, inputs.delta)).exp())
}

/// Bound on `Pr(Ω_J)` for a single wrong support.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WrongSetBound {
    pub value: f64,
    pub ln_value: f64,
    /// `E ≤ δ′`: the bound degenerates to 2.
    pub vacuous: bool,
}

/// `2 exp(−((m−k)/4)·((E − δ′)/(E + σ²))²)` for residual energy `E`.
pub fn prob_wrong_set_bound(m: usize, k: usize, sigma_sq: f64, delta: f64, residual_energy: f64) -> Result<WrongSetBound> {
    if m <= k {
        return param_err(alloc::format!("bound needs m > k (m = {m}, k = {k})"));
    }
    if !(residual_energy >= 0.0) || !(sigma_sq > 0.0) || !(delta > 0.0) {
        return param_err("residual energy must be nonnegative; sigma_sq, delta positive");
    }
    let dp = delta_prime(m, k, delta);
    if residual_energy <= dp {
        return Ok(WrongSetBound {
            value: 2.0,
            ln_value: core::f64::consts::LN_2,
            vacuous: true,
        });
    }
    let ratio = (residual_energy - dp) / (residual_energy + sigma_sq);
    let ln_value = core::f64::consts::LN_2 - (m - k) as f64 / 4.0 * ratio * ratio;
    Ok(WrongSetBound {
        value: ln_value.exp(),
        ln_value,
        vacuous: false,
    })
}

/// Contribution of the wrong supports overlapping the truth in `p` places.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OverlapTerm {
    pub p: usize,
    /// `ln(C(k,p)·C(n−k,k−p))`.
    pub ln_count: f64,
    /// Residual-energy floor used for this overlap.
    pub energy_floor: f64,
    pub per_set: WrongSetBound,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UnionBound {
    /// `exp(−c₀m)`, or `None` when `c₀` was not supplied.
    pub rank_term: Option<f64>,
    pub atypical_term: f64,
    pub ln_wrong_set_term: f64,
    pub wrong_set_term: f64,
    pub terms: Vec<OverlapTerm>,
    /// Sum of all quantified terms.
    pub total: f64,
}

impl UnionBound {
    /// `total ≥ 1`: the bound says nothing about the error probability.
    pub fn vacuous(&self) -> bool {
        self.total >= 1.0
    }
}

/// Overlaps `p < k` whose wrong supports can violate `metric`, with the
/// residual-energy floor `Σ_{I∖J} x_i²` is guaranteed to exceed.
pub fn overlap_floors(k: usize, mu: f64, energy: f64, metric: Metric) -> Vec<(usize, f64)> {
    match metric {
        Metric::D1 => (0..k).map(|p| (p, (k - p) as f64 * mu * mu)).collect(),
        // Same comparison as Metric::success, so the ranges agree exactly.
        Metric::D2 { alpha } => (0..k)
            .filter(|&p| !(p as f64 / k as f64 > 1.0 - alpha))
            .map(|p| (p, alpha * k as f64 * mu * mu))
            .collect(),
        Metric::D3 { eps_energy } => (0..k).map(|p| (p, eps_energy * energy)).collect(),
    }
}

/// `exp(−c₀m) + Pr-bound(Ω_I^c) + Σ_p C(k,p)C(n−k,k−p)·Pr-bound(Ω_J; E_p)`.
pub fn union_bound(inputs: &AchievabilityInputs, metric: Metric) -> Result<UnionBound> {
    inputs.validate()?;
    let AchievabilityInputs { n, k, m, sigma_sq, delta, .. } = *inputs;
    let mut terms = Vec::new();
    for (p, floor) in overlap_floors(k, inputs.mu, inputs.energy, metric) {
        let ln_count = ln_binomial(k, p) + ln_binomial(n - k, k - p);
        if ln_count == f64::NEG_INFINITY {
            continue;
        }
        terms.push(OverlapTerm {
            p,
            ln_count,
            energy_floor: floor,
            per_set: prob_wrong_set_bound(m, k, sigma_sq, delta, floor)?,
        });
    }
    let logs: Vec<f64> = terms.iter().map(|t| t.ln_count + t.per_set.ln_value).collect();
    let ln_wrong = log_sum_exp(&logs);
    let wrong = ln_wrong.exp();
    let rank_term = inputs.c0.map(|c0| (-c0 * m as f64).exp());
    let atypical = prob_atypical_bound(inputs)?;
    Ok(UnionBound {
        rank_term,
        atypical_term: atypical,
        ln_wrong_set_term: ln_wrong,
        wrong_set_term: wrong,
        total: rank_term.unwrap_or(0.0) + atypical + wrong,
        terms,
    })
}

/// Gaussian compound-MAC sum rate `½ ln(1 + ‖ᾱ‖²/σ²)` in nats.
pub fn cmac_sumrate_gaussian(gains: &GainProfile, sigma_sq: f64) -> f64 {
    0.5 * (gains.energy() / sigma_sq).ln_1p()
}

fn check_nk(n: usize, k: usize) -> Result<()> {
    if k == 0 || k >= n {
        return param_err(alloc::format!("need 0 < k < n, got k = {k}, n = {n}"));
    }
    Ok(())
}

/// `m ≥ k ln(n/k) / R`, with `R` in nats per measurement.
pub fn converse_general(n: usize, k: usize, r_cmac: f64) -> Result<f64> {
    check_nk(n, k)?;
    if !(r_cmac > 0.0) {
        return param_err("sum rate must be positive");
    }
    Ok(k as f64 * (n as f64 / k as f64).ln() / r_cmac)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConverseInputs {
    pub n: usize,
    pub k: usize,
    pub gains: GainProfile,
    pub sigma_sq: f64,
}

impl ConverseInputs {
    pub fn new(n: usize, k: usize, gains: GainProfile, sigma_sq: f64) -> Result<Self> {
        check_nk(n, k)?;
        if gains.k() != k {
            return param_err(alloc::format!("expected {k} gains, got {}", gains.k()));
        }
        if !(sigma_sq > 0.0) {
            return param_err("sigma_sq must be positive");
        }
        Ok(Self { n, k, gains, sigma_sq })
    }
}

/// Lower bounds on `m` for a Gaussian ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GaussianConverse {
    /// `2 log(n/k) / log(1 + α_k²/σ²)`.
    pub weakest_user: f64,
    /// `2k log(n/k) / log(1 + ‖ᾱ‖²/σ²)`.
    pub sum_rate: f64,
    pub two_term_max: f64,
    /// `log(n−k+1) / log(1 + α_k²/σ²)`.
    pub refined_single_user: f64,
    /// `σ² ln(n/k) / α_k²`.
    pub low_snr: f64,
    /// Whether `α_k²/σ² < LOW_SNR_THRESHOLD`.
    pub low_snr_valid: bool,
}

pub fn converse_gaussian(inputs: &ConverseInputs) -> GaussianConverse {
    let (n, k) = (inputs.n as f64, inputs.k as f64);
    let snr_k = inputs.gains.alpha_k().powi(2) / inputs.sigma_sq;
    let log2_nk = (n / k).log2();
    let weak_rate = (1.0 + snr_k).log2();
    let weakest_user = 2.0 * log2_nk / weak_rate;
    let sum_rate = 2.0 * k * log2_nk / (1.0 + inputs.gains.energy() / inputs.sigma_sq).log2();
    GaussianConverse {
        weakest_user,
        sum_rate,
        two_term_max: weakest_user.max(sum_rate),
        refined_single_user: (n - k + 1.0).log2() / weak_rate,
        low_snr: (n / k).ln() / snr_k,
        low_snr_valid: snr_k < LOW_SNR_THRESHOLD,
    }
}

/// `m ≥ 2k log₂(n/k) / log₂(πek/2)` for ±1 ensembles.
pub fn converse_bernoulli(n: usize, k: usize) -> Result<f64> {
    check_nk(n, k)?;
    let kf = k as f64;
    let denom = (core::f64::consts::PI * core::f64::consts::E * kf / 2.0).log2();
    if !(denom > 0.0) {
        return param_err("πek/2 must exceed 1");
    }
    Ok(2.0 * kf * (n as f64 / kf).log2() / denom)
}

/// Gaussian-input AWGN cutoff rate `E₀ = ½ ln(1 + α²/(2σ²))` in nats.
pub fn cutoff_rate(alpha: f64, sigma_sq: f64) -> f64 {
    0.5 * (alpha * alpha / (2.0 * sigma_sq)).ln_1p()
}

/// `exp(−E₀(α_k, σ²)·m)`: lower bound on the recovery error probability.
pub fn error_exponent_floor(m: usize, alpha_k: f64, sigma_sq: f64) -> f64 {
    (-cutoff_rate(alpha_k, sigma_sq) * m as f64).exp()
}
