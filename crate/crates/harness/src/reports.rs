//! JSON reports for the `bounds` and `verify-concentration` subcommands.

use jtsupport_core::bounds::{
    cmac_sumrate_gaussian, converse_bernoulli, converse_general, converse_gaussian, cutoff_rate, error_exponent_floor,
    nats_to_bits, prob_atypical_bound, union_bound, AchievabilityInputs, ConverseInputs, GaussianConverse, UnionBound,
};
use jtsupport_core::concentration::{
    chernoff_maximizer, chernoff_objective, chernoff_rate, check_moment_condition, check_tail_bounds, upper_threshold,
    MomentReport, TailReport, VMeta, VSampler,
};
use jtsupport_core::ensembles::{check_sweep_grid, fit_decay, rank_deficient_trial, singular_point, EnsembleKind, EnsembleSpec, SingularSweep};
use jtsupport_core::linalg::DEFAULT_RANK_TOL;
use jtsupport_core::seed;
use jtsupport_core::signal::{GainProfile, Metric, SparseSignal, Support};
use rayon::prelude::*;
use rayon::ThreadPool;
use serde::Serialize;

use crate::config::{ConcentrationConfig, RankSweepConfig, SweepConfig};
use crate::error::{HarnessError, Result};

pub const E0_INTERPRETATION: &str = "gaussian_input_cutoff_rate: E0 = 0.5 ln(1 + alpha_k^2 / (2 sigma^2)) nats";
pub const RANK_TERM_UNQUANTIFIED: &str = "unquantified, see empirical rank sweep";

#[derive(Debug, Clone, Serialize)]
pub struct MetricBound {
    pub metric: &'static str,
    pub param: f64,
    pub vacuous: bool,
    #[serde(flatten)]
    pub bound: UnionBound,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsRecord {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub sigma_sq: f64,
    pub delta: f64,
    pub gains: Vec<f64>,
    pub mu: f64,
    pub energy: f64,
    /// `None` when `m ≤ k`.
    pub prob_atypical_bound: Option<f64>,
    pub union_bounds: Vec<MetricBound>,
    pub cmac_sumrate_nats: f64,
    pub cmac_sumrate_bits: f64,
    pub converse_general: Option<f64>,
    pub converse_gaussian: Option<GaussianConverse>,
    pub converse_bernoulli: Option<f64>,
    pub cutoff_rate_nats: f64,
    pub error_exponent_floor: f64,
    pub e0_interpretation: &'static str,
    pub c0: Option<f64>,
    /// Set when `c0` is absent and the rank-failure term is left out.
    pub rank_term_note: Option<&'static str>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub records: Vec<BoundsRecord>,
}

fn gains_for(config: &SweepConfig, k: usize) -> Result<GainProfile> {
    match &config.gains {
        Some(g) if g.len() != k => Err(HarnessError::Config(format!("gains has {} entries but k = {k}", g.len()))),
        Some(g) => Ok(GainProfile::new(g.clone())?),
        None => Ok(GainProfile::uniform(k, config.magnitude.floor())?),
    }
}

pub fn bounds_record(config: &SweepConfig, n: usize, k: usize, m: usize) -> Result<BoundsRecord> {
    if k == 0 || k > n {
        return Err(HarnessError::Config(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    let gains = gains_for(config, k)?;
    let inputs = AchievabilityInputs {
        n,
        k,
        m,
        sigma_sq: config.sigma_sq,
        delta: config.delta,
        mu: gains.alpha_k(),
        energy: gains.energy(),
        c0: config.c0,
    };
    let metrics = [Metric::D1, Metric::d2(config.alpha)?, Metric::d3(config.eps_energy)?];
    let (atypical, union_bounds) = if m > k {
        let ub = metrics
            .iter()
            .map(|&metric| {
                let bound = union_bound(&inputs, metric)?;
                Ok(MetricBound {
                    metric: metric.name(),
                    param: metric.param(),
                    vacuous: bound.vacuous(),
                    bound,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        (Some(prob_atypical_bound(&inputs)?), ub)
    } else {
        (None, Vec::new())
    };
    let rate = cmac_sumrate_gaussian(&gains, config.sigma_sq);
    let proper = k < n;
    Ok(BoundsRecord {
        n,
        k,
        m,
        sigma_sq: config.sigma_sq,
        delta: config.delta,
        gains: gains.gains().to_vec(),
        mu: gains.alpha_k(),
        energy: gains.energy(),
        prob_atypical_bound: atypical,
        union_bounds,
        cmac_sumrate_nats: rate,
        cmac_sumrate_bits: nats_to_bits(rate),
        converse_general: if proper { Some(converse_general(n, k, rate)?) } else { None },
        converse_gaussian: if proper {
            Some(converse_gaussian(&ConverseInputs::new(n, k, gains.clone(), config.sigma_sq)?))
        } else {
            None
        },
        converse_bernoulli: converse_bernoulli(n, k).ok(),
        cutoff_rate_nats: cutoff_rate(gains.alpha_k(), config.sigma_sq),
        error_exponent_floor: error_exponent_floor(m, gains.alpha_k(), config.sigma_sq),
        e0_interpretation: E0_INTERPRETATION,
        c0: config.c0,
        rank_term_note: config.c0.is_none().then_some(RANK_TERM_UNQUANTIFIED),
    })
}

pub fn bounds_report(config: &SweepConfig) -> Result<BoundsReport> {
    config.validate()?;
    let records = config
        .points()
        .into_iter()
        .map(|(n, k, m)| bounds_record(config, n, k, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundsReport { records })
}

#[derive(Debug, Clone, Serialize)]
pub struct ChernoffCheck {
    pub gamma1: f64,
    pub gamma2: f64,
    pub lambda: f64,
    pub eps: f64,
    pub t_search: f64,
    pub g_search: f64,
    pub t_closed_form: f64,
    pub g_closed_form: f64,
    pub ok: bool,
}

pub fn chernoff_checks(cfg: &ConcentrationConfig) -> Vec<ChernoffCheck> {
    let mut out = Vec::new();
    for &gamma1 in &cfg.gamma1_grid {
        for &gamma2 in &cfg.gamma2_grid {
            for &lambda in &cfg.lambda_grid {
                let eps = upper_threshold(lambda, gamma1, gamma2);
                let (t_search, g_search) = chernoff_rate(eps, gamma1, gamma2);
                let t_closed_form = chernoff_maximizer(eps, gamma1, gamma2);
                let g_closed_form = chernoff_objective(t_closed_form, eps, gamma1, gamma2);
                out.push(ChernoffCheck {
                    gamma1,
                    gamma2,
                    lambda,
                    eps,
                    t_search,
                    g_search,
                    t_closed_form,
                    g_closed_form,
                    ok: (g_search - lambda).abs() < 1e-8 && (g_closed_form - g_search).abs() < 1e-8,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationRun {
    pub ensemble: EnsembleKind,
    pub overlap: usize,
    pub meta: VMeta,
    pub sample_mean: f64,
    pub tails: TailReport,
    /// `None` when too few full-rank draws were left.
    pub moments: Option<MomentReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationReport {
    pub seed: u64,
    pub chernoff_identity: Vec<ChernoffCheck>,
    pub runs: Vec<ConcentrationRun>,
    pub rank_sweep: Option<SingularSweep>,
    pub tail_violations: usize,
    pub moment_violations: usize,
    pub chernoff_failures: usize,
}

/// Signal on `{0..k}` and a candidate sharing its first `p` indices.
pub fn overlap_instance(n: usize, k: usize, magnitude: f64, p: usize) -> Result<(SparseSignal, Support)> {
    if p > k || 2 * k - p > n {
        return Err(HarnessError::Config(format!("overlap {p} impossible with n = {n}, k = {k}")));
    }
    let x = SparseSignal::new(n, Support::new((0..k).collect())?, vec![magnitude; k])?;
    let j = Support::new((0..p).chain(k..2 * k - p).collect())?;
    Ok((x, j))
}

pub fn concentration_run(
    pool: &ThreadPool,
    cfg: &ConcentrationConfig,
    kind: EnsembleKind,
    overlap: usize,
    master: u64,
) -> Result<ConcentrationRun> {
    if cfg.trials < 1_000 {
        return Err(HarnessError::Config("concentration trials must be at least 1000".into()));
    }
    let (x, j) = overlap_instance(cfg.n, cfg.k, cfg.magnitude, overlap)?;
    let run_seed = seed::substream(seed::substream(master, kind as u64), overlap as u64);
    let spec = EnsembleSpec::new(kind, 0, cfg.normalization);
    let sampler = VSampler::new(spec, &x, &j, cfg.sigma_sq, cfg.m, run_seed)?;
    let draws = pool.install(|| {
        (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| sampler.draw(t))
            .collect::<jtsupport_core::Result<Vec<_>>>()
    })?;
    let vs = sampler.collect(draws);
    let sample_mean = vs.samples.iter().sum::<f64>() / vs.samples.len().max(1) as f64;
    let tails = check_tail_bounds(&vs, &cfg.lambda_grid)?;
    let moments = if vs.samples.len() >= jtsupport_core::concentration::MIN_TAIL_SAMPLES {
        Some(check_moment_condition(&vs, &cfg.t_grid)?)
    } else {
        None
    };
    Ok(ConcentrationRun {
        ensemble: kind,
        overlap,
        meta: vs.meta,
        sample_mean,
        tails,
        moments,
    })
}

pub fn rank_sweep(pool: &ThreadPool, cfg: &RankSweepConfig, master: u64) -> Result<SingularSweep> {
    check_sweep_grid(cfg.k, &cfg.m_grid, cfg.trials)?;
    let spec = EnsembleSpec::new(cfg.kind, seed::substream(master, 0x72616e6b), Default::default());
    let points = cfg
        .m_grid
        .iter()
        .map(|&m| {
            let deficient = pool.install(|| {
                (0..cfg.trials as u64)
                    .into_par_iter()
                    .map(|t| rank_deficient_trial(spec, cfg.k, m, t, DEFAULT_RANK_TOL).map(usize::from))
                    .sum::<jtsupport_core::Result<usize>>()
            })?;
            Ok(singular_point(m, cfg.trials, deficient))
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_decay(&points);
    Ok(SingularSweep { k: cfg.k, points, fit })
}

pub fn concentration_report(pool: &ThreadPool, config: &SweepConfig) -> Result<ConcentrationReport> {
    let cfg = &config.concentration;
    if cfg.lambda_grid.is_empty() || cfg.t_grid.is_empty() {
        return Err(HarnessError::Config("lambda_grid and t_grid must be non-empty".into()));
    }
    let chernoff_identity = chernoff_checks(cfg);
    let mut runs = Vec::new();
    for &kind in &cfg.ensembles {
        for &p in &cfg.overlaps {
            runs.push(concentration_run(pool, cfg, kind, p, config.seed)?);
        }
    }
    let rank = cfg.rank_sweep.as_ref().map(|r| rank_sweep(pool, r, config.seed)).transpose()?;
    Ok(ConcentrationReport {
        seed: config.seed,
        tail_violations: runs.iter().map(|r| r.tails.violations()).sum(),
        moment_violations: runs.iter().filter_map(|r| r.moments.as_ref()).map(|m| m.violations()).sum(),
        chernoff_failures: chernoff_identity.iter().filter(|c| !c.ok).count(),
        chernoff_identity,
        runs,
        rank_sweep: rank,
    })
}
