//! `cfar`: thresholds, detection curves, false-alarm regulation and the
//! invariant suite from the command line.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cfar_core::analytic::{ca_threshold, ideal_threshold, os_threshold, SolverSettings};
use cfar_core::detector::{DetectorSpec, StatKind};
use cfar_core::experiment::{
    pd_curve_rows, regulation_rows, write_rows, OutputFormat, RunConfig, TableRow,
};
use cfar_core::simulation::{resolve_threshold, Engine};
use cfar_core::{verify, Error};

const EXIT_VALIDATION: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_VERIFY: u8 = 3;

#[derive(Parser)]
#[command(
    name = "cfar",
    version,
    about = "CFAR detector thresholds and experiments"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML run config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the threshold multiplier τ for a design Pfa.
    Threshold(ThresholdArgs),
    /// Pd against SCR for every configured detector.
    PdCurve,
    /// Empirical Pfa as a clutter edge enters the window.
    Regulation,
    /// Run the invariant suite.
    Verify {
        /// Only run properties whose name contains this text.
        #[arg(long)]
        filter: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StatArg {
    Ca,
    Os,
    Min,
    Gm,
    Ideal,
}

#[derive(Args)]
struct ThresholdArgs {
    #[arg(long, value_enum)]
    stat: StatArg,
    #[arg(long, default_value_t = 32)]
    window: usize,
    /// Order-statistic index, 1-based (required for `os`).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    pfa: f64,
    /// Clutter rate λ, used by `ideal` only.
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
    /// Calibration runs for `gm`; defaults to 100/pfa.
    #[arg(long)]
    runs: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("cfar: {e}");
            ExitCode::from(match e {
                Error::SolverFailure { .. } => EXIT_SOLVER,
                _ => EXIT_VALIDATION,
            })
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Threshold(args) => {
            let tau = threshold(&args, &cli.global)?;
            println!("{}", significant(tau, 9));
        }
        Command::PdCurve => {
            let cfg = load_config(&cli.global)?;
            let engine = Engine::new(cfg.workers)?;
            emit(&pd_curve_rows(&cfg, &engine)?, &cfg)?;
        }
        Command::Regulation => {
            let cfg = load_config(&cli.global)?;
            let engine = Engine::new(cfg.workers)?;
            emit(&regulation_rows(&cfg, &engine)?, &cfg)?;
        }
        Command::Verify { filter } => {
            let outcomes = verify::run(filter.as_deref());
            if outcomes.is_empty() {
                return Err(Error::Config(format!(
                    "no property matches '{}'",
                    filter.unwrap_or_default()
                )));
            }
            let width = outcomes.iter().map(|o| o.name.len()).max().unwrap_or(0);
            let mut failed = 0;
            for o in &outcomes {
                let status = if o.passed { "PASS" } else { "FAIL" };
                failed += usize::from(!o.passed);
                println!("{status}  {:width$}  {}", o.name, o.detail);
            }
            println!("{} passed, {failed} failed", outcomes.len() - failed);
            if failed > 0 {
                return Ok(ExitCode::from(EXIT_VERIFY));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn threshold(args: &ThresholdArgs, global: &Global) -> Result<f64, Error> {
    let (n, pfa) = (args.window, args.pfa);
    let stat = match args.stat {
        StatArg::Ca => Some(StatKind::Sum),
        StatArg::Os => args.k.map(StatKind::OrderStatistic),
        StatArg::Min => Some(StatKind::Minimum),
        StatArg::Gm => Some(StatKind::GeometricMean),
        StatArg::Ideal => None,
    };
    if let Some(stat) = stat {
        DetectorSpec::new(stat, n, 0, 0.0)?;
    }
    match args.stat {
        StatArg::Ca => ca_threshold(pfa, n),
        StatArg::Os => {
            let k = args
                .k
                .ok_or_else(|| Error::Config("--k is required for --stat os".into()))?;
            os_threshold(pfa, n, k, &SolverSettings::default())
        }
        StatArg::Min => resolve_threshold(StatKind::Minimum, n, pfa),
        StatArg::Ideal => ideal_threshold(pfa, args.rate),
        StatArg::Gm => {
            if !(pfa > 0.0 && pfa <= 1.0) {
                return Err(Error::Domain(format!("pfa must lie in (0, 1], got {pfa}")));
            }
            let runs = args.runs.unwrap_or((100.0 / pfa).ceil() as u64);
            let engine = Engine::new(global.workers.unwrap_or(1))?;
            engine.calibrate_threshold_mc(
                StatKind::GeometricMean,
                n,
                pfa,
                runs,
                global.seed.unwrap_or(1),
            )
        }
    }
}

/// `x` rounded to `digits` significant digits in positional notation.
fn significant(x: f64, digits: i32) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{:.*}", digits as usize, x);
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (digits - 1 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

fn load_config(global: &Global) -> Result<RunConfig, Error> {
    let mut cfg = match &global.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    if let Some(workers) = global.workers {
        cfg.workers = workers;
    }
    if let Some(out) = &global.out {
        cfg.out = Some(out.clone());
    }
    if let Some(format) = global.format {
        cfg.format = format;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit<T: TableRow>(rows: &[T], cfg: &RunConfig) -> Result<(), Error> {
    match &cfg.out {
        Some(path) => {
            let file = File::create(path)
                .map_err(|e| Error::Config(format!("cannot create {}: {e}", path.display())))?;
            write_rows(rows, cfg.format, BufWriter::new(file))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write_rows(rows, cfg.format, &mut lock)?;
            lock.flush()
                .map_err(|e| Error::Config(format!("cannot write output: {e}")))
        }
    }
}
