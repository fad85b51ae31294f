//! Sparse signals, the observation channel `y = Ax + z`, and the three
//! support-recovery metrics.

use alloc::vec::Vec;
#[allow(unused_imports)] // needed for f64 math under no_std
use num_traits::Float as _;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::ensembles::MeasurementMatrix;
use crate::error::{param_err, Error, Result};
use crate::seed;

/// A strictly increasing list of column indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "Vec<usize>", into = "Vec<usize>"))]
pub struct Support(Vec<usize>);

impl Support {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return param_err("support indices must be strictly increasing");
        }
        Ok(Self(indices))
    }

    /// Sorts and deduplicates.
    pub fn from_unsorted(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self(indices)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    /// `|self ∩ other|`.
    pub fn overlap(&self, other: &Support) -> usize {
        let (mut a, mut b) = (self.0.iter().peekable(), other.0.iter().peekable());
        let mut count = 0;
        while let (Some(&&x), Some(&&y)) = (a.peek(), b.peek()) {
            match x.cmp(&y) {
                core::cmp::Ordering::Less => {
                    a.next();
                }
                core::cmp::Ordering::Greater => {
                    b.next();
                }
                core::cmp::Ordering::Equal => {
                    count += 1;
                    a.next();
                    b.next();
                }
            }
        }
        count
    }

    pub fn max_index(&self) -> Option<usize> {
        self.0.last().copied()
    }
}

impl TryFrom<Vec<usize>> for Support {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Support> for Vec<usize> {
    fn from(s: Support) -> Self {
        s.0
    }
}

/// A `k`-sparse vector of dimension `n`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SparseSignal {
    n: usize,
    support: Support,
    values: Vec<f64>,
}

impl SparseSignal {
    pub fn new(n: usize, support: Support, values: Vec<f64>) -> Result<Self> {
        let k = support.len();
        if k == 0 || k > n {
            return param_err(alloc::format!("need 1 <= k <= n, got k = {k}, n = {n}"));
        }
        if support.max_index().is_some_and(|i| i >= n) {
            return param_err("support index out of range");
        }
        if values.len() != k {
            return Err(Error::Dimension {
                expected: k,
                got: values.len(),
            });
        }
        if values.iter().any(|v| *v == 0.0 || !v.is_finite()) {
            return param_err("signal values must be finite and nonzero");
        }
        Ok(Self { n, support, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(index, value)` pairs.
    pub fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.support.as_slice().iter().copied().zip(self.values.iter().copied())
    }

    /// `P = ‖x‖²`.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// `μ(x) = min |x_i|` over the support.
    pub fn min_magnitude(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }

    /// Energy of `x` on the indices of `j`.
    pub fn energy_on(&self, j: &Support) -> f64 {
        self.entries()
            .filter(|(i, _)| j.contains(*i))
            .map(|(_, v)| v * v)
            .sum()
    }

    pub fn gains(&self) -> GainProfile {
        GainProfile::new(self.values.iter().map(|v| v.abs()).collect()).expect("signal values are nonzero")
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.n];
        for (i, v) in self.entries() {
            out[i] = v;
        }
        out
    }
}

/// Additive white Gaussian noise with per-coordinate variance `σ²`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NoiseModel {
    sigma_sq: f64,
}

impl NoiseModel {
    pub fn new(sigma_sq: f64) -> Result<Self> {
        if !(sigma_sq > 0.0 && sigma_sq.is_finite()) {
            return param_err("noise variance must be positive and finite");
        }
        Ok(Self { sigma_sq })
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma_sq
    }

    /// `z ∼ N(0, σ² I_m)`, deterministic in `seed`.
    pub fn sample(&self, m: usize, seed: u64) -> Vec<f64> {
        let mut rng = seed::rng(seed);
        let normal = Normal::new(0.0, self.sigma_sq.sqrt()).expect("positive variance");
        (0..m).map(|_| normal.sample(&mut rng)).collect()
    }
}

/// Nonzero magnitudes of a signal in descending order.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GainProfile {
    gains: Vec<f64>,
}

impl GainProfile {
    pub fn new(mut gains: Vec<f64>) -> Result<Self> {
        if gains.is_empty() {
            return param_err("gain profile is empty");
        }
        if gains.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
            return param_err("gains must be positive and finite");
        }
        gains.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { gains })
    }

    /// `k` copies of `gain`.
    pub fn uniform(k: usize, gain: f64) -> Result<Self> {
        Self::new(alloc::vec![gain; k])
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn k(&self) -> usize {
        self.gains.len()
    }

    /// Weakest gain `α_k`.
    pub fn alpha_k(&self) -> f64 {
        *self.gains.last().expect("nonempty")
    }

    /// `‖ᾱ‖²`.
    pub fn energy(&self) -> f64 {
        self.gains.iter().map(|g| g * g).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MagnitudeLaw {
    Fixed(f64),
    /// Uniform on `[lo, hi]`.
    Uniform(f64, f64),
}

impl MagnitudeLaw {
    fn validate(self) -> Result<()> {
        match self {
            Self::Fixed(mu) if mu > 0.0 && mu.is_finite() => Ok(()),
            Self::Uniform(lo, hi) if lo > 0.0 && hi >= lo && hi.is_finite() => Ok(()),
            _ => param_err("magnitudes must be positive with lo <= hi"),
        }
    }

    /// Smallest magnitude the law can produce.
    pub fn floor(self) -> f64 {
        match self {
            Self::Fixed(mu) | Self::Uniform(mu, _) => mu,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SignLaw {
    #[default]
    Positive,
    Random,
}

/// Draws a `k`-sparse signal with support uniform over the `C(n, k)` subsets.
pub fn make_signal(n: usize, k: usize, magnitude: MagnitudeLaw, signs: SignLaw, seed: u64) -> Result<SparseSignal> {
    if k == 0 || k > n {
        return param_err(alloc::format!("need 1 <= k <= n, got k = {k}, n = {n}"));
    }
    magnitude.validate()?;
    let mut rng = seed::rng(seed);
    let support = Support::from_unsorted(rand::seq::index::sample(&mut rng, n, k).into_vec());
    let values = (0..k)
        .map(|_| {
            let mag = match magnitude {
                MagnitudeLaw::Fixed(mu) => mu,
                MagnitudeLaw::Uniform(lo, hi) if lo == hi => lo,
                MagnitudeLaw::Uniform(lo, hi) => rng.random_range(lo..=hi),
            };
            match signs {
                SignLaw::Positive => mag,
                SignLaw::Random if rng.random::<bool>() => -mag,
                SignLaw::Random => mag,
            }
        })
        .collect();
    SparseSignal::new(n, support, values)
}

/// `Ax` restricted to the support.
pub fn noiseless(a: &MeasurementMatrix, x: &SparseSignal) -> Result<Vec<f64>> {
    if a.cols() != x.n() {
        return Err(Error::Dimension {
            expected: a.cols(),
            got: x.n(),
        });
    }
    let mut y = alloc::vec![0.0; a.rows()];
    for (i, v) in x.entries() {
        crate::linalg::axpy(v, a.column(i), &mut y);
    }
    Ok(y)
}

/// `y = Ax + z` with `z ∼ N(0, σ²I)` drawn from `seed`.
pub fn observe(a: &MeasurementMatrix, x: &SparseSignal, noise: NoiseModel, seed: u64) -> Result<Vec<f64>> {
    let mut y = noiseless(a, x)?;
    for (yi, zi) in y.iter_mut().zip(noise.sample(a.rows(), seed)) {
        *yi += zi;
    }
    Ok(y)
}

/// Recovery criterion applied to a decoded support `J`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Metric {
    /// Exact support: `J = I`.
    D1,
    /// Fraction `|I ∩ J| / k > 1 − alpha`.
    D2 { alpha: f64 },
    /// Captured energy `Σ_{I∩J} x_i² > (1 − eps_energy) P`.
    D3 { eps_energy: f64 },
}

impl Metric {
    pub fn d2(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return param_err("alpha must lie in (0, 1)");
        }
        Ok(Self::D2 { alpha })
    }

    pub fn d3(eps_energy: f64) -> Result<Self> {
        if !(eps_energy > 0.0 && eps_energy < 1.0) {
            return param_err("eps_energy must lie in (0, 1)");
        }
        Ok(Self::D3 { eps_energy })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::D1 => "d1",
            Self::D2 { .. } => "d2",
            Self::D3 { .. } => "d3",
        }
    }

    /// The metric's parameter, `0` for `D1`.
    pub fn param(&self) -> f64 {
        match *self {
            Self::D1 => 0.0,
            Self::D2 { alpha } => alpha,
            Self::D3 { eps_energy } => eps_energy,
        }
    }

    /// Success indicator for decoded support `j`.
    pub fn success(&self, x: &SparseSignal, j: &Support) -> bool {
        match *self {
            Self::D1 => metric_d1(x, j),
            Self::D2 { alpha } => overlap_fraction(x, j) > 1.0 - alpha,
            Self::D3 { eps_energy } => x.energy_on(j) > (1.0 - eps_energy) * x.energy(),
        }
    }
}

fn overlap_fraction(x: &SparseSignal, j: &Support) -> f64 {
    x.support().overlap(j) as f64 / x.k() as f64
}

/// `1` iff `J = I`.
pub fn metric_d1(x: &SparseSignal, j: &Support) -> bool {
    x.support() == j
}

/// `1` iff `|I ∩ J| / k > 1 − alpha`.
pub fn metric_d2(x: &SparseSignal, j: &Support, alpha: f64) -> Result<bool> {
    Ok(Metric::d2(alpha)?.success(x, j))
}

/// `1` iff `Σ_{i ∈ I∩J} x_i² > (1 − eps_energy)·P`.
pub fn metric_d3(x: &SparseSignal, j: &Support, eps_energy: f64) -> Result<bool> {
    Ok(Metric::d3(eps_energy)?.success(x, j))
}
