//! Parallel execution of sweeps. Trials run on a rayon pool and are collected
//! in index order, so the worker count never changes a result.

use jtsupport_core::experiment::{compare_bounds, run_trial, summarize, ComparisonRow, PointConfig, PointSummary, TrialRecord};
use jtsupport_core::Error as CoreError;
use rayon::prelude::*;
use rayon::ThreadPool;
use serde::Serialize;

use crate::config::SweepConfig;
use crate::error::{HarnessError, Result};

pub fn pool(workers: Option<usize>) -> Result<ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        b = b.num_threads(w);
    }
    b.build().map_err(|e| HarnessError::Config(format!("cannot start worker pool: {e}")))
}

/// A grid point that was not run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedPoint {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SweepResult {
    pub points: Vec<PointSummary>,
    pub comparisons: Vec<ComparisonRow>,
    pub skipped: Vec<SkippedPoint>,
}

pub fn run_trials(pool: &ThreadPool, cfg: &PointConfig) -> Result<Vec<TrialRecord>> {
    let records = pool.install(|| {
        (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| run_trial(cfg, t))
            .collect::<jtsupport_core::Result<Vec<_>>>()
    })?;
    Ok(records)
}

pub fn run_point(pool: &ThreadPool, cfg: &PointConfig) -> Result<(PointSummary, Vec<ComparisonRow>)> {
    cfg.validate()?;
    let records = run_trials(pool, cfg)?;
    let summary = summarize(cfg, &records)?;
    let rows = compare_bounds(cfg, &summary, &records)?;
    Ok((summary, rows))
}

/// Runs every grid point. Points over the subset budget are recorded and
/// skipped; any other error aborts the sweep.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let pool = pool(config.workers)?;
    let mut out = SweepResult::default();
    for (n, k, m) in config.points() {
        let cfg = config.point(n, k, m)?;
        match run_point(&pool, &cfg) {
            Ok((summary, rows)) => {
                out.points.push(summary);
                out.comparisons.extend(rows);
            }
            Err(HarnessError::Core(e @ CoreError::Budget { .. })) => out.skipped.push(SkippedPoint {
                n,
                k,
                m,
                reason: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
