//! Measurement-matrix ensembles.
//!
//! Entries are drawn i.i.d. from a zero-mean, unit-variance subgaussian law
//! and then each column is rescaled according to a [`Normalization`]. The
//! matrix is a deterministic function of `(spec, m, n)`.

use alloc::vec::Vec;
#[allow(unused_imports)] // needed for f64 math under no_std
use num_traits::Float as _;
use rand::Rng;
use rand::distr::Uniform;
use rand_distr::StandardNormal;

use crate::error::{param_err, Result};
use crate::linalg::{numerical_rank, Matrix};
use crate::seed::{self, TrialRng};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EnsembleKind {
    /// Standard normal entries.
    Gaussian,
    /// ±1 with probability ½ each.
    Rademacher,
    /// Uniform on `[−√3, √3]`.
    UniformPm,
}

impl EnsembleKind {
    pub const ALL: [EnsembleKind; 3] = [Self::Gaussian, Self::Rademacher, Self::UniformPm];

    /// A moment `B` for which `Pr(|x| ≥ t) ≤ 2 exp(−t²/B²)` holds.
    ///
    /// A law bounded by `M` satisfies the tail with `B = M`.
    pub fn subgaussian_moment(self) -> f64 {
        match self {
            Self::Gaussian => core::f64::consts::SQRT_2,
            Self::Rademacher => 1.0,
            Self::UniformPm => SQRT_3,
        }
    }

    pub fn draw(self, rng: &mut TrialRng) -> f64 {
        match self {
            Self::Gaussian => rng.sample(StandardNormal),
            Self::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Self::UniformPm => rng.sample(Uniform::new_inclusive(-SQRT_3, SQRT_3).expect("valid range")),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::Rademacher => "rademacher",
            Self::UniformPm => "uniform_pm",
        }
    }
}

impl core::str::FromStr for EnsembleKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "rademacher" => Ok(Self::Rademacher),
            "uniform_pm" => Ok(Self::UniformPm),
            other => param_err(alloc::format!("unknown ensemble kind `{other}`")),
        }
    }
}

/// Column scaling applied after sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Normalization {
    /// `‖a_i‖ = 1`.
    #[default]
    UnitColumn,
    /// `‖a_i‖² = m`.
    RootMColumn,
    /// Entries left at unit variance.
    Raw,
}

impl core::str::FromStr for Normalization {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit_column" => Ok(Self::UnitColumn),
            "root_m_column" => Ok(Self::RootMColumn),
            "raw" => Ok(Self::Raw),
            other => param_err(alloc::format!("unknown normalization `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub seed: u64,
    pub normalization: Normalization,
}

impl EnsembleSpec {
    pub fn new(kind: EnsembleKind, seed: u64, normalization: Normalization) -> Self {
        Self {
            kind,
            seed,
            normalization,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMatrix {
    pub body: Matrix,
    pub spec: EnsembleSpec,
}

impl MeasurementMatrix {
    pub fn rows(&self) -> usize {
        self.body.rows()
    }

    pub fn cols(&self) -> usize {
        self.body.cols()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        self.body.column(j)
    }
}

/// Samples an `m × n` matrix. Same `(spec, m, n)` gives the same bits.
pub fn sample_matrix(spec: EnsembleSpec, m: usize, n: usize) -> Result<MeasurementMatrix> {
    if m == 0 || n == 0 {
        return param_err("matrix dimensions must be positive");
    }
    let mut rng = seed::rng(spec.seed);
    let mut data = Vec::with_capacity(m * n);
    for _ in 0..n {
        let start = data.len();
        data.extend((0..m).map(|_| spec.kind.draw(&mut rng)));
        normalize_column(&mut data[start..], spec.normalization);
    }
    Ok(MeasurementMatrix {
        body: Matrix::from_col_major(m, n, data)?,
        spec,
    })
}

fn normalize_column(col: &mut [f64], normalization: Normalization) {
    let target = match normalization {
        Normalization::Raw => return,
        Normalization::UnitColumn => 1.0,
        Normalization::RootMColumn => (col.len() as f64).sqrt(),
    };
    let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        let s = target / norm;
        col.iter_mut().for_each(|v| *v *= s);
    }
}

/// One row of an empirical subgaussian tail check.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TailPoint {
    pub t: f64,
    pub empirical: f64,
    pub bound: f64,
    pub violation: bool,
}

/// Compares `Pr(|x| ≥ t)` for raw entries of `spec.kind` against
/// `2 exp(−t²/B²)` with the kind's [`EnsembleKind::subgaussian_moment`].
pub fn empirical_subgaussian_tail(spec: EnsembleSpec, samples: usize, t_grid: &[f64]) -> Result<Vec<TailPoint>> {
    if t_grid.is_empty() {
        return param_err("empty t grid");
    }
    if samples < 10_000 {
        return param_err("subgaussian tail check needs at least 10^4 samples");
    }
    if t_grid.iter().any(|t| !(*t >= 0.0)) {
        return param_err("t grid must be nonnegative");
    }
    let mut rng = seed::rng(spec.seed);
    let mut exceed = alloc::vec![0usize; t_grid.len()];
    for _ in 0..samples {
        let x = spec.kind.draw(&mut rng).abs();
        for (c, &t) in exceed.iter_mut().zip(t_grid) {
            if x >= t {
                *c += 1;
            }
        }
    }
    let b2 = spec.kind.subgaussian_moment().powi(2);
    Ok(t_grid
        .iter()
        .zip(exceed)
        .map(|(&t, c)| {
            let empirical = c as f64 / samples as f64;
            let bound = 2.0 * (-t * t / b2).exp();
            TailPoint {
                t,
                empirical,
                bound,
                violation: empirical > bound + 3.0 * (bound / samples as f64).sqrt(),
            }
        })
        .collect())
}

/// Rank-deficiency frequency of `m × k` draws at one `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SingularPoint {
    pub m: usize,
    pub trials: usize,
    pub deficient: usize,
    pub frequency: f64,
    /// Binomial standard error `√(p̂(1−p̂)/trials)`.
    pub se: f64,
}

/// Least-squares line `ln(frequency) ≈ intercept + slope·m`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SingularSweep {
    pub k: usize,
    pub points: Vec<SingularPoint>,
    /// Present when at least two frequencies are nonzero.
    pub fit: Option<DecayFit>,
}

/// Whether trial `trial` of the sweep at row count `m` is rank deficient.
pub fn rank_deficient_trial(spec: EnsembleSpec, k: usize, m: usize, trial: u64, tol: f64) -> Result<bool> {
    let s = seed::substream(seed::substream(spec.seed, m as u64), trial);
    let a = sample_matrix(spec.with_seed(s), m, k)?;
    Ok(numerical_rank(&a.body, tol)? < k)
}

pub fn check_sweep_grid(k: usize, m_grid: &[usize], trials: usize) -> Result<()> {
    if k == 0 {
        return param_err("k must be positive");
    }
    if trials < 1_000 {
        return param_err("singular-value sweep needs at least 10^3 trials");
    }
    if let Some(m) = m_grid.iter().find(|&&m| m < k) {
        return param_err(alloc::format!("m = {m} is below k = {k}"));
    }
    Ok(())
}

pub fn singular_point(m: usize, trials: usize, deficient: usize) -> SingularPoint {
    let frequency = deficient as f64 / trials as f64;
    SingularPoint {
        m,
        trials,
        deficient,
        frequency,
        se: (frequency * (1.0 - frequency) / trials as f64).sqrt(),
    }
}

pub fn fit_decay(points: &[SingularPoint]) -> Option<DecayFit> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.frequency > 0.0)
        .map(|p| (p.m as f64, p.frequency.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some(DecayFit {
        slope,
        intercept: my - slope * mx,
        points: pts.len(),
    })
}

/// Empirical `Pr(rank(X) < k)` for `m × k` draws, per `m` in the grid.
pub fn smallest_singular_sweep(
    spec: EnsembleSpec,
    k: usize,
    m_grid: &[usize],
    trials: usize,
    tol: f64,
) -> Result<SingularSweep> {
    check_sweep_grid(k, m_grid, trials)?;
    let mut points = Vec::with_capacity(m_grid.len());
    for &m in m_grid {
        let mut deficient = 0;
        for t in 0..trials as u64 {
            if rank_deficient_trial(spec, k, m, t, tol)? {
                deficient += 1;
            }
        }
        points.push(singular_point(m, trials, deficient));
    }
    let fit = fit_decay(&points);
    Ok(SingularSweep { k, points, fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DEFAULT_RANK_TOL;

    fn spec(kind: EnsembleKind, normalization: Normalization) -> EnsembleSpec {
        EnsembleSpec::new(kind, 42, normalization)
    }

    #[test]
    fn rademacher_unit_columns_are_halves() {
        let a = sample_matrix(spec(EnsembleKind::Rademacher, Normalization::UnitColumn), 4, 2).unwrap();
        for j in 0..2 {
            assert!(a.column(j).iter().all(|&v| v == 0.5 || v == -0.5));
        }
    }

    #[test]
    fn root_m_columns_have_norm_sq_m() {
        let a = sample_matrix(spec(EnsembleKind::Gaussian, Normalization::RootMColumn), 9, 5).unwrap();
        for j in 0..5 {
            let n2: f64 = a.column(j).iter().map(|v| v * v).sum();
            assert!((n2 - 9.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_columns_for_every_kind() {
        for kind in EnsembleKind::ALL {
            let a = sample_matrix(spec(kind, Normalization::UnitColumn), 13, 7).unwrap();
            for j in 0..7 {
                let n2: f64 = a.column(j).iter().map(|v| v * v).sum();
                assert!((n2.sqrt() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn uniform_pm_has_unit_variance() {
        let a = sample_matrix(spec(EnsembleKind::UniformPm, Normalization::Raw), 10_000, 1).unwrap();
        let col = a.column(0);
        let mean = col.iter().sum::<f64>() / 1e4;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (1e4 - 1.0);
        assert!((0.95..=1.05).contains(&var), "{var}");
        assert!(col.iter().all(|v| v.abs() <= SQRT_3));
    }

    #[test]
    fn sampling_is_reproducible() {
        let s = spec(EnsembleKind::Gaussian, Normalization::UnitColumn);
        assert_eq!(sample_matrix(s, 6, 4).unwrap(), sample_matrix(s, 6, 4).unwrap());
        assert_ne!(sample_matrix(s, 6, 4).unwrap(), sample_matrix(s.with_seed(43), 6, 4).unwrap());
    }

    #[test]
    fn rademacher_tail_beyond_one_is_empty() {
        let pts = empirical_subgaussian_tail(spec(EnsembleKind::Rademacher, Normalization::Raw), 10_000, &[1.5]).unwrap();
        assert_eq!(pts[0].empirical, 0.0);
        assert!((pts[0].bound - 2.0 * (-2.25f64).exp()).abs() < 1e-15);
        assert!((pts[0].bound - 0.2107).abs() < 1e-4);
        assert!(!pts[0].violation);
    }

    #[test]
    fn tail_at_zero_is_one() {
        let pts = empirical_subgaussian_tail(spec(EnsembleKind::Gaussian, Normalization::Raw), 10_000, &[0.0]).unwrap();
        assert_eq!(pts[0].empirical, 1.0);
        assert_eq!(pts[0].bound, 2.0);
    }

    #[test]
    fn tail_parameter_errors() {
        let s = spec(EnsembleKind::Gaussian, Normalization::Raw);
        assert!(empirical_subgaussian_tail(s, 10_000, &[]).is_err());
        assert!(empirical_subgaussian_tail(s, 10, &[1.0]).is_err());
    }

    #[test]
    fn single_sign_column_never_deficient() {
        let sweep = smallest_singular_sweep(
            spec(EnsembleKind::Rademacher, Normalization::UnitColumn),
            1,
            &[1, 3, 8],
            1_000,
            DEFAULT_RANK_TOL,
        )
        .unwrap();
        assert!(sweep.points.iter().all(|p| p.frequency == 0.0));
        assert!(sweep.fit.is_none());
    }

    #[test]
    fn sweep_rejects_m_below_k() {
        let s = spec(EnsembleKind::Rademacher, Normalization::Raw);
        assert!(smallest_singular_sweep(s, 3, &[2], 1_000, DEFAULT_RANK_TOL).is_err());
        assert!(smallest_singular_sweep(s, 3, &[3], 10, DEFAULT_RANK_TOL).is_err());
    }

    #[test]
    fn decay_fit_recovers_exact_line() {
        let pts: Vec<SingularPoint> = [(2usize, 0.5f64), (4, 0.125), (6, 0.03125)]
            .iter()
            .map(|&(m, f)| SingularPoint {
                m,
                trials: 1,
                deficient: 0,
                frequency: f,
                se: 0.0,
            })
            .collect();
        let fit = fit_decay(&pts).unwrap();
        assert!((fit.slope + core::f64::consts::LN_2).abs() < 1e-12);
    }
}
