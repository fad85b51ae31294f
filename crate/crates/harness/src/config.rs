//! The single JSON document that drives every subcommand.

use std::path::Path;

use jtsupport_core::decoder::{DecodeMode, TypicalityParams, DEFAULT_MAX_SUBSETS};
use jtsupport_core::ensembles::{EnsembleKind, EnsembleSpec, Normalization};
use jtsupport_core::experiment::PointConfig;
use jtsupport_core::linalg::DEFAULT_RANK_TOL;
use jtsupport_core::signal::{MagnitudeLaw, SignLaw};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub kind: EnsembleKind,
    #[serde(default)]
    pub normalization: Normalization,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            kind: EnsembleKind::Gaussian,
            normalization: Normalization::UnitColumn,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub ensemble: EnsembleConfig,
    pub n_grid: Vec<usize>,
    pub k_grid: Vec<usize>,
    pub m_grid: Vec<usize>,
    pub sigma_sq: f64,
    pub delta: f64,
    pub rank_tol: f64,
    pub alpha: f64,
    pub eps_energy: f64,
    pub magnitude: MagnitudeLaw,
    pub signs: SignLaw,
    pub trials: usize,
    pub seed: u64,
    pub mode: DecodeMode,
    pub max_subsets: u64,
    pub c0: Option<f64>,
    /// Worker threads; `None` uses all cores.
    pub workers: Option<usize>,
    /// Explicit gains for the `bounds` subcommand. Defaults to `k` copies of
    /// the magnitude floor.
    pub gains: Option<Vec<f64>>,
    pub concentration: ConcentrationConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            ensemble: EnsembleConfig::default(),
            n_grid: vec![12],
            k_grid: vec![2],
            m_grid: vec![24],
            sigma_sq: 1.0,
            delta: 0.1,
            rank_tol: DEFAULT_RANK_TOL,
            alpha: 0.5,
            eps_energy: 0.5,
            magnitude: MagnitudeLaw::Fixed(1.0),
            signs: SignLaw::Positive,
            trials: 1000,
            seed: 0,
            mode: DecodeMode::Strict,
            max_subsets: DEFAULT_MAX_SUBSETS,
            c0: None,
            workers: None,
            gains: None,
            concentration: ConcentrationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConcentrationConfig {
    pub ensembles: Vec<EnsembleKind>,
    pub normalization: Normalization,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub sigma_sq: f64,
    pub magnitude: f64,
    /// Overlaps `|I ∩ J|` of the wrong candidates tried.
    pub overlaps: Vec<usize>,
    pub trials: usize,
    pub lambda_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub gamma1_grid: Vec<f64>,
    pub gamma2_grid: Vec<f64>,
    pub rank_sweep: Option<RankSweepConfig>,
}

impl Default for ConcentrationConfig {
    fn default() -> Self {
        Self {
            ensembles: EnsembleKind::ALL.to_vec(),
            normalization: Normalization::Raw,
            n: 20,
            k: 10,
            m: 100,
            sigma_sq: 1.0,
            magnitude: 1.0,
            overlaps: vec![0, 5, 10],
            trials: 100_000,
            lambda_grid: vec![0.5, 1.0, 2.0],
            t_grid: vec![-0.2, -0.1, 0.0, 0.1, 0.2],
            gamma1_grid: vec![1.0, 10.0, 90.0],
            gamma2_grid: vec![0.5, 1.0, 2.0],
            rank_sweep: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankSweepConfig {
    pub kind: EnsembleKind,
    pub k: usize,
    pub m_grid: Vec<usize>,
    pub trials: usize,
}

/// Values given on the command line; each one replaces its config key.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub trials: Option<usize>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub m: Option<usize>,
}

impl SweepConfig {
    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| HarnessError::Json {
            path: origin.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text, path)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(w) = o.workers {
            self.workers = Some(w);
        }
        if let Some(t) = o.trials {
            self.trials = t;
        }
        if let Some(n) = o.n {
            self.n_grid = vec![n];
        }
        if let Some(k) = o.k {
            self.k_grid = vec![k];
        }
        if let Some(m) = o.m {
            self.m_grid = vec![m];
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(HarnessError::Config(msg.to_string()));
        if self.n_grid.is_empty() || self.k_grid.is_empty() || self.m_grid.is_empty() {
            return bad("n_grid, k_grid and m_grid must be non-empty");
        }
        if self.trials == 0 {
            return bad("trials must be positive");
        }
        if self.workers == Some(0) {
            return bad("workers must be positive");
        }
        self.typicality()?;
        Ok(())
    }

    pub fn typicality(&self) -> Result<TypicalityParams> {
        Ok(TypicalityParams::new(self.delta, self.rank_tol)?)
    }

    /// Grid points in canonical `(n, k, m)` order without duplicates.
    pub fn points(&self) -> Vec<(usize, usize, usize)> {
        let mut pts: Vec<_> = self
            .n_grid
            .iter()
            .flat_map(|&n| self.k_grid.iter().flat_map(move |&k| self.m_grid.iter().map(move |&m| (n, k, m))))
            .collect();
        pts.sort_unstable();
        pts.dedup();
        pts
    }

    pub fn point(&self, n: usize, k: usize, m: usize) -> Result<PointConfig> {
        Ok(PointConfig {
            n,
            k,
            m,
            ensemble: EnsembleSpec::new(self.ensemble.kind, 0, self.ensemble.normalization),
            sigma_sq: self.sigma_sq,
            params: self.typicality()?,
            alpha: self.alpha,
            eps_energy: self.eps_energy,
            magnitude: self.magnitude,
            signs: self.signs,
            trials: self.trials,
            seed: self.seed,
            mode: self.mode,
            max_subsets: self.max_subsets,
            c0: self.c0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_documents_fill_defaults() {
        let c = SweepConfig::from_json(r#"{"n_grid": [8, 6, 8], "seed": 3, "magnitude": {"uniform": [1, 2]}}"#, Path::new("x"))
            .unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.magnitude, MagnitudeLaw::Uniform(1.0, 2.0));
        assert_eq!(c.points(), vec![(6, 2, 24), (8, 2, 24)]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = SweepConfig::from_json(r#"{"sigma": 1}"#, Path::new("x")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn overrides_win() {
        let mut c = SweepConfig::default();
        c.apply(&Overrides { seed: Some(9), m: Some(30), ..Default::default() });
        assert_eq!((c.seed, c.m_grid.clone()), (9, vec![30]));
    }
}
