//! δ-joint-typicality decoding by exhaustive search over size-`k` supports.
//!
//! A candidate `J` is typical for `y` when `A_J` has full column rank and
//! `|‖Π⊥_{A_J} y‖²/m − (m−k)σ²/m| < δ`. The decoder classifies every
//! candidate; which candidate (if any) counts as the decision depends on
//! [`DecodeMode`].

use alloc::vec::Vec;

use crate::ensembles::MeasurementMatrix;
use crate::error::{param_err, Error, Result};
use crate::linalg::{Qr, DEFAULT_RANK_TOL};
use crate::signal::{Metric, SparseSignal, Support};

/// Default cap on `C(n, k)` for exhaustive search.
pub const DEFAULT_MAX_SUBSETS: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TypicalityParams {
    pub delta: f64,
    pub rank_tol: f64,
}

impl TypicalityParams {
    pub fn new(delta: f64, rank_tol: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return param_err("typicality slack delta must be positive");
        }
        if !(rank_tol > 0.0) {
            return param_err("rank tolerance must be positive");
        }
        Ok(Self { delta, rank_tol })
    }

    pub fn with_delta(delta: f64) -> Result<Self> {
        Self::new(delta, DEFAULT_RANK_TOL)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Typicality {
    Typical,
    Atypical,
    RankDeficient,
}

/// Decision rule applied to the family of typical supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DecodeMode {
    /// Success iff the true support is typical and no typical wrong support
    /// violates the metric. Errors coincide with the union of Ω₀, Ω_I^c and
    /// the metric-relevant Ω_J.
    #[default]
    Strict,
    /// Decide the unique typical support; several or none is no decision.
    FirstUnique,
}

impl core::str::FromStr for DecodeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(Self::Strict),
            "first_unique" => Ok(Self::FirstUnique),
            other => param_err(alloc::format!("unknown decode mode `{other}`")),
        }
    }
}

/// `|‖Π⊥ y‖²/m − (m−k)σ²/m|` for the columns given, or `None` when they are
/// numerically rank deficient.
pub fn typicality_statistic<'a>(
    m: usize,
    columns: impl IntoIterator<Item = &'a [f64]>,
    y: &[f64],
    sigma_sq: f64,
    rank_tol: f64,
) -> Result<Option<f64>> {
    let qr = Qr::from_columns(m, columns)?;
    let k = qr.cols();
    if qr.rank(rank_tol) < k {
        return Ok(None);
    }
    let residual = qr.residual_norm_sq(y)?;
    let mf = m as f64;
    Ok(Some((residual / mf - (m - k) as f64 / mf * sigma_sq).abs()))
}

fn classify(statistic: Option<f64>, delta: f64) -> Typicality {
    match statistic {
        None => Typicality::RankDeficient,
        // Boundary equality is atypical.
        Some(s) if s < delta => Typicality::Typical,
        Some(_) => Typicality::Atypical,
    }
}

fn check_candidate(a: &MeasurementMatrix, j: &Support) -> Result<()> {
    if j.is_empty() {
        return param_err("candidate support is empty");
    }
    if j.len() > a.rows() {
        return param_err(alloc::format!("|J| = {} exceeds m = {}", j.len(), a.rows()));
    }
    if j.max_index().is_some_and(|i| i >= a.cols()) {
        return param_err("candidate index out of range");
    }
    Ok(())
}

/// Tests one candidate support `j` (with `k = |j|`).
pub fn is_typical(
    a: &MeasurementMatrix,
    j: &Support,
    y: &[f64],
    sigma_sq: f64,
    params: TypicalityParams,
) -> Result<Typicality> {
    check_candidate(a, j)?;
    if y.len() != a.rows() {
        return Err(Error::Dimension {
            expected: a.rows(),
            got: y.len(),
        });
    }
    let stat = typicality_statistic(
        a.rows(),
        j.as_slice().iter().map(|&i| a.column(i)),
        y,
        sigma_sq,
        params.rank_tol,
    )?;
    Ok(classify(stat, params.delta))
}

/// Which of the three error events occurred relative to a true support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EventFlags {
    /// Ω₀: the true submatrix is rank deficient.
    pub omega0: bool,
    /// Ω_I^c: the (full-rank) true support is not typical.
    pub omega_i_complement: bool,
    /// Ω_J: some wrong support is typical.
    pub omega_j_fired: bool,
}

impl EventFlags {
    pub fn any(&self) -> bool {
        self.omega0 || self.omega_i_complement || self.omega_j_fired
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    pub mode: DecodeMode,
    /// Typical supports in lexicographic order.
    pub typical_sets: Vec<Support>,
    pub rank_failures: usize,
    /// Rank-deficient supports in lexicographic order.
    pub rank_deficient_sets: Vec<Support>,
    /// The decision; only `FirstUnique` mode selects.
    pub chosen: Option<Support>,
    pub subsets_examined: u64,
}

impl DecodeOutcome {
    pub fn events(&self, true_support: &Support) -> EventFlags {
        classify_events(self, true_support)
    }

    /// Success indicator of this decode for `x` under `metric`.
    pub fn success(&self, x: &SparseSignal, metric: Metric) -> bool {
        match self.mode {
            DecodeMode::Strict => {
                let truth = x.support();
                let truth_typical = self.typical_sets.binary_search(truth).is_ok();
                truth_typical
                    && self
                        .typical_sets
                        .iter()
                        .filter(|j| *j != truth)
                        .all(|j| metric.success(x, j))
            }
            DecodeMode::FirstUnique => self.chosen.as_ref().is_some_and(|j| metric.success(x, j)),
        }
    }
}

/// Splits a decode into the events Ω₀, Ω_I^c and Ω_J.
pub fn classify_events(outcome: &DecodeOutcome, true_support: &Support) -> EventFlags {
    let omega0 = outcome.rank_deficient_sets.binary_search(true_support).is_ok();
    let truth_typical = outcome.typical_sets.binary_search(true_support).is_ok();
    EventFlags {
        omega0,
        omega_i_complement: !omega0 && !truth_typical,
        omega_j_fired: outcome.typical_sets.iter().any(|j| j != true_support),
    }
}

/// `C(n, k)` saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc·(n−i) is divisible by (i+1) after the multiply.
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Size-`k` subsets of `0..n` in lexicographic order.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    current: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            current: (0..k).collect(),
            done: k > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let k = self.current.len();
        match (0..k).rev().find(|&i| self.current[i] < self.n - k + i) {
            Some(i) => {
                self.current[i] += 1;
                for j in i + 1..k {
                    self.current[j] = self.current[j - 1] + 1;
                }
            }
            None => self.done = true,
        }
        Some(out)
    }
}

/// Classifies every size-`k` support of `A`'s columns against `y`.
pub fn decode_exhaustive(
    a: &MeasurementMatrix,
    y: &[f64],
    k: usize,
    sigma_sq: f64,
    params: TypicalityParams,
    mode: DecodeMode,
    max_subsets: u64,
) -> Result<DecodeOutcome> {
    let (m, n) = (a.rows(), a.cols());
    if k == 0 || k > n {
        return param_err(alloc::format!("need 1 <= k <= n, got k = {k}, n = {n}"));
    }
    if k > m {
        return param_err(alloc::format!("k = {k} exceeds m = {m}"));
    }
    if y.len() != m {
        return Err(Error::Dimension { expected: m, got: y.len() });
    }
    let count = binomial(n, k);
    if count > max_subsets as u128 {
        return Err(Error::Budget {
            n,
            k,
            count: count as f64,
            budget: max_subsets,
        });
    }
    let mut outcome = DecodeOutcome {
        mode,
        typical_sets: Vec::new(),
        rank_failures: 0,
        rank_deficient_sets: Vec::new(),
        chosen: None,
        subsets_examined: 0,
    };
    for subset in Combinations::new(n, k) {
        let stat = typicality_statistic(m, subset.iter().map(|&i| a.column(i)), y, sigma_sq, params.rank_tol)?;
        outcome.subsets_examined += 1;
        match classify(stat, params.delta) {
            Typicality::Typical => outcome.typical_sets.push(Support::new(subset)?),
            Typicality::RankDeficient => {
                outcome.rank_failures += 1;
                outcome.rank_deficient_sets.push(Support::new(subset)?);
            }
            Typicality::Atypical => {}
        }
    }
    if mode == DecodeMode::FirstUnique && outcome.typical_sets.len() == 1 {
        outcome.chosen = outcome.typical_sets.first().cloned();
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{sample_matrix, EnsembleKind, EnsembleSpec, Normalization};
    use alloc::vec;

    fn sup(v: &[usize]) -> Support {
        Support::new(v.to_vec()).unwrap()
    }

    fn gaussian(m: usize, n: usize, seed: u64) -> MeasurementMatrix {
        sample_matrix(EnsembleSpec::new(EnsembleKind::Gaussian, seed, Normalization::UnitColumn), m, n).unwrap()
    }

    #[test]
    fn combinations_are_lexicographic_and_complete() {
        let all: Vec<Vec<usize>> = Combinations::new(5, 3).collect();
        assert_eq!(all.len(), 10);
        assert_eq!(all[0], vec![0, 1, 2]);
        assert_eq!(all[9], vec![2, 3, 4]);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(Combinations::new(4, 4).count(), 1);
        assert_eq!(Combinations::new(3, 4).count(), 0);
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(18, 2), 153);
        assert_eq!(binomial(30, 15), 155_117_520);
        assert_eq!(binomial(5, 6), 0);
        assert_eq!(binomial(200, 100), u128::MAX);
    }

    #[test]
    fn zero_observation_statistic() {
        let a = gaussian(10, 5, 1);
        let j = sup(&[1, 3]);
        let y = vec![0.0; 10];
        let p = |d| TypicalityParams::with_delta(d).unwrap();
        assert_eq!(is_typical(&a, &j, &y, 1.0, p(0.81)).unwrap(), Typicality::Typical);
        assert_eq!(is_typical(&a, &j, &y, 1.0, p(0.8)).unwrap(), Typicality::Atypical);
        assert_eq!(is_typical(&a, &j, &y, 1.0, p(0.5)).unwrap(), Typicality::Atypical);
    }

    #[test]
    fn observation_in_span_is_atypical() {
        let a = gaussian(10, 5, 2);
        let y: Vec<f64> = a.column(0).iter().zip(a.column(4)).map(|(u, v)| 2.0 * u - v).collect();
        let p = TypicalityParams::with_delta(0.5).unwrap();
        assert_eq!(is_typical(&a, &sup(&[0, 4]), &y, 1.0, p).unwrap(), Typicality::Atypical);
    }

    #[test]
    fn repeated_column_is_rank_deficient() {
        let body = crate::linalg::Matrix::from_columns(&[&[1.0, 0.0, 1.0], &[1.0, 0.0, 1.0], &[0.0, 1.0, 0.0]]).unwrap();
        let a = MeasurementMatrix {
            body,
            spec: EnsembleSpec::new(EnsembleKind::Rademacher, 0, Normalization::Raw),
        };
        let p = TypicalityParams::with_delta(1.0).unwrap();
        let y = [1.0, 1.0, 1.0];
        assert_eq!(is_typical(&a, &sup(&[0, 1]), &y, 1.0, p).unwrap(), Typicality::RankDeficient);
        let out = decode_exhaustive(&a, &y, 2, 1.0, p, DecodeMode::Strict, 100).unwrap();
        assert_eq!(out.rank_failures, 1);
        let ev = out.events(&sup(&[0, 1]));
        assert!(ev.omega0 && !ev.omega_i_complement);
    }

    #[test]
    fn candidate_errors() {
        let a = gaussian(3, 5, 3);
        let p = TypicalityParams::with_delta(1.0).unwrap();
        let y = [0.0; 3];
        assert!(is_typical(&a, &sup(&[5]), &y, 1.0, p).is_err());
        assert!(is_typical(&a, &sup(&[0, 1, 2, 3]), &y, 1.0, p).is_err());
        assert!(is_typical(&a, &sup(&[0]), &[0.0; 2], 1.0, p).is_err());
        assert!(decode_exhaustive(&a, &y, 4, 1.0, p, DecodeMode::Strict, 100).is_err());
        assert!(matches!(
            decode_exhaustive(&gaussian(4, 30, 1), &[0.0; 4], 3, 1.0, p, DecodeMode::Strict, 100),
            Err(Error::Budget { .. })
        ));
        assert!(TypicalityParams::new(0.0, 1e-10).is_err());
        assert!(TypicalityParams::new(1.0, 0.0).is_err());
    }

    #[test]
    fn single_candidate_reduces_to_is_typical() {
        let a = gaussian(8, 4, 4);
        let y: Vec<f64> = (0..8).map(|i| i as f64 * 0.1).collect();
        let p = TypicalityParams::with_delta(0.3).unwrap();
        let out = decode_exhaustive(&a, &y, 4, 0.05, p, DecodeMode::FirstUnique, 10).unwrap();
        assert_eq!(out.subsets_examined, 1);
        let single = is_typical(&a, &sup(&[0, 1, 2, 3]), &y, 0.05, p).unwrap();
        assert_eq!(out.typical_sets.len() == 1, single == Typicality::Typical);
    }

    #[test]
    fn huge_delta_makes_everything_typical() {
        let a = gaussian(6, 5, 5);
        let y = [0.3, -0.2, 0.5, 0.1, 0.0, 1.0];
        let x = SparseSignal::new(5, sup(&[0, 2]), vec![1.0, 1.0]).unwrap();
        let p = TypicalityParams::with_delta(1e9).unwrap();
        let out = decode_exhaustive(&a, &y, 2, 1.0, p, DecodeMode::Strict, 100).unwrap();
        assert_eq!(out.typical_sets.len(), 10);
        assert!(!out.success(&x, Metric::D1));
        assert!(out.chosen.is_none());
        let ev = out.events(x.support());
        assert!(ev.omega_j_fired && !ev.omega_i_complement && !ev.omega0);
    }

    fn outcome(typical: &[&[usize]]) -> DecodeOutcome {
        DecodeOutcome {
            mode: DecodeMode::Strict,
            typical_sets: typical.iter().map(|s| sup(s)).collect(),
            rank_failures: 0,
            rank_deficient_sets: Vec::new(),
            chosen: None,
            subsets_examined: 15,
        }
    }

    #[test]
    fn event_classification() {
        let truth = sup(&[1, 4]);
        assert_eq!(outcome(&[&[1, 4]]).events(&truth), EventFlags::default());
        assert!(outcome(&[]).events(&truth).omega_i_complement);
        let both = outcome(&[&[1, 3], &[1, 4]]).events(&truth);
        assert!(both.omega_j_fired && !both.omega_i_complement);
    }

    #[test]
    fn strict_success_tolerates_metric_compatible_wrong_sets() {
        let x = SparseSignal::new(6, sup(&[0, 1, 2, 3]), vec![1.0; 4]).unwrap();
        let out = outcome(&[&[0, 1, 2, 3], &[0, 1, 2, 5]]);
        assert!(!out.success(&x, Metric::D1));
        assert!(out.success(&x, Metric::d2(0.5).unwrap()));
        assert!(!out.success(&x, Metric::d2(0.1).unwrap()));
        assert!(out.success(&x, Metric::d3(0.3).unwrap()));
    }
}
