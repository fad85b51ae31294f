use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use jtsupport::config::{Overrides, SweepConfig};
use jtsupport::emit::{self, Format};
use jtsupport::reports;
use jtsupport::runner;
use jtsupport::{HarnessError, Result};

#[derive(Parser)]
#[command(name = "jtsupport", about = "Joint-typicality support recovery: simulation, bounds, concentration checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON configuration document.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Table format for simulate and sweep. Reports are always JSON.
    #[arg(long, default_value = "csv")]
    format: Format,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo run at a single (n, k, m).
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        /// Also write the bound comparison table (JSON) here.
        #[arg(long)]
        compare: Option<PathBuf>,
    },
    /// Monte Carlo run over the full grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        compare: Option<PathBuf>,
    },
    /// Closed-form achievability and converse bounds at every grid point.
    Bounds {
        #[command(flatten)]
        common: Common,
    },
    /// Empirical checks of the V-statistic tail and moment bounds.
    VerifyConcentration {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trials: Option<usize>,
    },
    Version,
}

fn load(common: &Common, extra: Overrides) -> Result<SweepConfig> {
    let mut config = match &common.config {
        Some(p) => SweepConfig::load(p)?,
        None => SweepConfig::default(),
    };
    config.apply(&Overrides {
        seed: common.seed,
        workers: common.workers,
        ..extra
    });
    config.validate()?;
    Ok(config)
}

fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|source| HarnessError::Json {
        path: path.unwrap_or(Path::new("<stdout>")).to_path_buf(),
        source,
    })?;
    emit::write_out(path, &(text + "\n"))
}

fn emit_sweep(common: &Common, compare: Option<&Path>, result: &runner::SweepResult) -> Result<()> {
    let rows = emit::rows(&result.points);
    emit::write_out(common.out.as_deref(), &emit::render(&rows, common.format))?;
    if let Some(path) = compare {
        write_json(Some(path), &result.comparisons)?;
    }
    for s in &result.skipped {
        eprintln!("skipped n={} k={} m={}: {}", s.n, s.k, s.m, s.reason);
    }
    if result.skipped.is_empty() {
        Ok(())
    } else {
        Err(HarnessError::BudgetSkipped { skipped: result.skipped.len() })
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Version => {
            println!("jtsupport {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
        Command::Simulate { common, n, k, m, trials, compare } => {
            let config = load(&common, Overrides { n, k, m, trials, ..Default::default() })?;
            let points = config.points();
            let [(n, k, m)] = points[..] else {
                return Err(HarnessError::Config(format!(
                    "simulate runs one point but the grids give {}; use sweep or --n/--k/--m",
                    points.len()
                )));
            };
            let pool = runner::pool(config.workers)?;
            let (summary, comparisons) = runner::run_point(&pool, &config.point(n, k, m)?)?;
            let result = runner::SweepResult {
                points: vec![summary],
                comparisons,
                skipped: Vec::new(),
            };
            emit_sweep(&common, compare.as_deref(), &result)
        }
        Command::Sweep { common, trials, compare } => {
            let config = load(&common, Overrides { trials, ..Default::default() })?;
            let result = runner::run_sweep(&config)?;
            emit_sweep(&common, compare.as_deref(), &result)
        }
        Command::Bounds { common } => {
            let config = load(&common, Overrides::default())?;
            write_json(common.out.as_deref(), &reports::bounds_report(&config)?)
        }
        Command::VerifyConcentration { common, trials } => {
            let mut config = load(&common, Overrides::default())?;
            if let Some(t) = trials {
                config.concentration.trials = t;
            }
            let pool = runner::pool(config.workers)?;
            write_json(common.out.as_deref(), &reports::concentration_report(&pool, &config)?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
