//! Config-driven experiment runs and their tabular output.
//!
//! A run config is a flat TOML file. Every key is optional; the defaults are
//! a 32-cell window, 8 guard cells, design Pfa 1e-4, unit clutter rate and
//! 10^6 runs per point. See `configs/` for the standard experiments.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analytic::{ca_pd, ideal_pd, os_pd};
use crate::detector::{DetectorSpec, StatKind, DEFAULT_GUARD_CELLS};
use crate::error::{Error, Result};
use crate::simulation::{
    resolve_threshold, Curve, Engine, ExperimentSpec, InterferenceSpec, Placement, RegulationSpec,
    Z_95,
};
use crate::stats::{db_to_linear, mix_keys, ClutterModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

fn default_window() -> usize {
    32
}
fn default_guard() -> usize {
    DEFAULT_GUARD_CELLS
}
fn default_pfa() -> f64 {
    1e-4
}
fn default_rate() -> f64 {
    1.0
}
fn default_runs() -> u64 {
    1_000_000
}
fn default_seed() -> u64 {
    1
}
fn default_workers() -> usize {
    1
}
fn default_detectors() -> Vec<String> {
    vec!["ca".to_string()]
}
fn default_true() -> bool {
    true
}
fn default_interference_count() -> usize {
    1
}
fn default_boost() -> f64 {
    10.0
}

/// Everything `pd-curve` and `regulation` need. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Reference window length N (even).
    #[serde(default = "default_window")]
    pub window: usize,
    /// Total guard cells, split evenly per side.
    #[serde(default = "default_guard")]
    pub guard_cells: usize,
    #[serde(default = "default_pfa")]
    pub design_pfa: f64,
    /// Exponential clutter rate λ.
    #[serde(default = "default_rate")]
    pub clutter_rate: f64,
    /// Monte Carlo trials per point.
    #[serde(default = "default_runs")]
    pub runs: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Detector names: `ca`, `os:K` (or `osK`), `gm`, `min`.
    #[serde(default = "default_detectors")]
    pub detectors: Vec<String>,
    /// Explicit SCR grid in dB.
    #[serde(default)]
    pub scr_db: Option<Vec<f64>>,
    /// `[start, stop, step]` in dB, inclusive of `stop`. Defaults to
    /// `[0, 30, 1]` when `scr_db` is absent too.
    #[serde(default)]
    pub scr_db_range: Option<[f64; 3]>,
    /// Emit interference-free curves.
    #[serde(default = "default_true")]
    pub clean: bool,
    /// Also simulate the interference-free curves that have a closed form.
    #[serde(default)]
    pub clean_montecarlo: bool,
    /// Interferers per trial for each level in `interference_inr_db`.
    #[serde(default = "default_interference_count")]
    pub interference_count: usize,
    /// One Monte Carlo curve per detector per listed INR (dB).
    #[serde(default)]
    pub interference_inr_db: Vec<f64>,
    /// Fixed 1-based CRP cells for the interferers; random when absent.
    #[serde(default)]
    pub interference_cells: Option<Vec<usize>>,
    /// Emit the fixed-threshold (known λ) detector as an upper bound.
    #[serde(default)]
    pub ideal_bound: bool,
    /// Clutter-edge power step in dB for `regulation`.
    #[serde(default = "default_boost")]
    pub boost_db: f64,
    /// Affected-cell counts for `regulation`; defaults to `0..=N`.
    #[serde(default)]
    pub affected_cells: Option<Vec<usize>>,
    /// Runs used to calibrate detectors without a closed-form threshold;
    /// defaults to `max(runs, 100/design_pfa)`.
    #[serde(default)]
    pub calibration_runs: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config uses defaults")
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::config(format!("cannot parse config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < 2 || self.window % 2 != 0 {
            return Err(Error::config(format!(
                "window must be even and at least 2, got {}",
                self.window
            )));
        }
        if self.guard_cells % 2 != 0 {
            return Err(Error::config("guard_cells must be even"));
        }
        if !(self.design_pfa > 0.0 && self.design_pfa <= 1.0) {
            return Err(Error::config(format!(
                "design_pfa must lie in (0, 1], got {}",
                self.design_pfa
            )));
        }
        if !(self.clutter_rate > 0.0 && self.clutter_rate.is_finite()) {
            return Err(Error::config("clutter_rate must be positive"));
        }
        if self.runs < 1 {
            return Err(Error::config("runs must be at least 1"));
        }
        if self.workers < 1 {
            return Err(Error::config("workers must be at least 1"));
        }
        if !(self.boost_db >= 0.0 && self.boost_db.is_finite()) {
            return Err(Error::config("boost_db must be nonnegative"));
        }
        for d in &self.detectors {
            parse_stat(d)?;
        }
        self.scr_grid()?;
        if let Some(cells) = &self.affected_cells {
            if let Some(j) = cells.iter().find(|&&j| j > self.window) {
                return Err(Error::config(format!(
                    "affected cell count {j} exceeds window"
                )));
            }
        }
        if !self.interference_inr_db.is_empty() {
            self.interference(0.0)
                .validate(self.window)
                .map_err(|e| Error::config(e.to_string()))?;
        }
        Ok(())
    }

    /// The SCR grid in dB.
    pub fn scr_grid(&self) -> Result<Vec<f64>> {
        let grid = match (&self.scr_db, &self.scr_db_range) {
            (Some(_), Some(_)) => {
                return Err(Error::config(
                    "give either scr_db or scr_db_range, not both",
                ))
            }
            (Some(g), None) => g.clone(),
            (None, range) => {
                let [start, stop, step] = range.unwrap_or([0.0, 30.0, 1.0]);
                if !(step > 0.0) || !(stop >= start) {
                    return Err(Error::config(
                        "scr_db_range needs step > 0 and stop >= start",
                    ));
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                (0..count).map(|i| start + i as f64 * step).collect()
            }
        };
        if grid.is_empty() {
            return Err(Error::config("SCR grid is empty"));
        }
        if grid.iter().any(|s| !s.is_finite()) {
            return Err(Error::config("SCR grid values must be finite"));
        }
        Ok(grid)
    }

    fn interference(&self, inr_db: f64) -> InterferenceSpec {
        InterferenceSpec {
            count: self.interference_count,
            inr_db,
            placement: match &self.interference_cells {
                Some(cells) => Placement::Fixed(cells.clone()),
                None => Placement::RandomUniform,
            },
        }
    }

    fn clutter(&self) -> Result<ClutterModel> {
        ClutterModel::new(self.clutter_rate).map_err(|e| Error::config(e.to_string()))
    }
}

/// Parses a detector name: `ca`, `os:K`, `osK`, `gm`, `min`.
pub fn parse_stat(name: &str) -> Result<StatKind> {
    let lower = name.trim().to_ascii_lowercase();
    let stat = match lower.as_str() {
        "ca" | "sum" => StatKind::Sum,
        "gm" | "geometric-mean" => StatKind::GeometricMean,
        "min" | "minimum" => StatKind::Minimum,
        other => {
            let k = other
                .strip_prefix("os:")
                .or_else(|| other.strip_prefix("os"))
                .and_then(|k| k.parse::<usize>().ok())
                .ok_or_else(|| Error::config(format!("unknown detector '{name}'")))?;
            StatKind::OrderStatistic(k)
        }
    };
    Ok(stat)
}

/// A detector with its label and resolved threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedDetector {
    pub label: String,
    pub spec: DetectorSpec,
}

/// Builds every configured detector with τ set for the design Pfa. The
/// geometric mean is calibrated by simulation.
pub fn resolve_detectors(cfg: &RunConfig, engine: &Engine) -> Result<Vec<NamedDetector>> {
    cfg.detectors
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let stat = parse_stat(name)?;
            let label = stat.label();
            let named_err = |e: Error| {
                Error::config(format!(
                    "cannot resolve threshold for detector '{name}': {e}"
                ))
            };
            let spec =
                DetectorSpec::new(stat, cfg.window, cfg.guard_cells, 0.0).map_err(named_err)?;
            let tau = match stat {
                StatKind::GeometricMean => {
                    let floor = (100.0 / cfg.design_pfa).ceil() as u64;
                    let runs = cfg.calibration_runs.unwrap_or(cfg.runs.max(floor));
                    engine.calibrate_threshold_mc(
                        stat,
                        cfg.window,
                        cfg.design_pfa,
                        runs,
                        mix_keys(&[cfg.seed, 0xCA11B, i as u64]),
                    )
                }
                _ => resolve_threshold(stat, cfg.window, cfg.design_pfa),
            }
            .map_err(named_err)?;
            Ok(NamedDetector {
                label,
                spec: spec.with_threshold(tau).map_err(named_err)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Analytic,
    Montecarlo,
}

/// One row of `pd-curve` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdRow {
    pub detector: String,
    pub stat: String,
    pub k: Option<usize>,
    pub scr_db: f64,
    pub pd_hat: f64,
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub runs: u64,
    pub source: Source,
}

/// One row of `regulation` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegulationRow {
    pub detector: String,
    pub affected_cells: usize,
    pub pfa_hat: f64,
    pub se: f64,
    pub design_pfa: f64,
    pub boost_db: f64,
    pub runs: u64,
}

fn closed_form_pd(spec: &DetectorSpec, scr: f64) -> Option<f64> {
    let tau = spec.threshold_multiplier();
    let n = spec.window_length();
    match spec.stat() {
        StatKind::Sum => Some(ca_pd(tau, scr, n)),
        StatKind::OrderStatistic(k) => os_pd(tau, scr, n, k).ok(),
        StatKind::Minimum => os_pd(tau, scr, n, 1).ok(),
        StatKind::GeometricMean => None,
    }
}

fn analytic_row(label: &str, spec: Option<&DetectorSpec>, scr_db: f64, pd: f64) -> PdRow {
    PdRow {
        detector: label.to_string(),
        stat: spec.map_or("ideal".to_string(), |s| match s.stat() {
            StatKind::OrderStatistic(_) => "os".to_string(),
            other => other.label(),
        }),
        k: spec.and_then(|s| s.stat().order_index()),
        scr_db,
        pd_hat: pd,
        se: 0.0,
        ci_lo: pd,
        ci_hi: pd,
        runs: 0,
        source: Source::Analytic,
    }
}

fn curve_rows(label: &str, curve: &Curve) -> Vec<PdRow> {
    curve
        .points
        .iter()
        .map(|p| {
            let (ci_lo, ci_hi) = p.estimate.confidence_interval(Z_95);
            PdRow {
                se: p.estimate.standard_error,
                ci_lo,
                ci_hi,
                runs: p.estimate.runs,
                source: Source::Montecarlo,
                ..analytic_row(label, Some(&curve.detector), p.abscissa, p.estimate.p_hat)
            }
        })
        .collect()
}

fn db_label(x: f64) -> String {
    format!("{x}db")
}

/// Pd-versus-SCR curves: analytic rows wherever a closed form applies
/// (clean curves), Monte Carlo rows for interference, for detectors without
/// a closed form and, on request, for clean curves too.
pub fn pd_curve_rows(cfg: &RunConfig, engine: &Engine) -> Result<Vec<PdRow>> {
    cfg.validate()?;
    let grid = cfg.scr_grid()?;
    let clutter = cfg.clutter()?;
    let detectors = resolve_detectors(cfg, engine)?;
    let mut rows = Vec::new();

    let experiment =
        |specs: Vec<DetectorSpec>, interference: Option<InterferenceSpec>, curve: u64| {
            ExperimentSpec {
                detectors: specs,
                clutter,
                scr_grid_db: grid.clone(),
                interference,
                runs: cfg.runs,
                seed: mix_keys(&[cfg.seed, curve]),
            }
        };

    if cfg.clean {
        for d in &detectors {
            for &scr_db in &grid {
                if let Some(pd) = closed_form_pd(&d.spec, db_to_linear(scr_db)) {
                    rows.push(analytic_row(&d.label, Some(&d.spec), scr_db, pd));
                }
            }
        }
        let simulated: Vec<&NamedDetector> = detectors
            .iter()
            .filter(|d| cfg.clean_montecarlo || closed_form_pd(&d.spec, 0.0).is_none())
            .collect();
        if !simulated.is_empty() {
            let exp = experiment(simulated.iter().map(|d| d.spec).collect(), None, 0);
            let curves = engine.scr_sweep(&exp)?;
            for (d, curve) in simulated.iter().zip(&curves) {
                rows.extend(curve_rows(&d.label, curve));
            }
        }
    }

    for (level, &inr_db) in cfg.interference_inr_db.iter().enumerate() {
        let exp = experiment(
            detectors.iter().map(|d| d.spec).collect(),
            Some(cfg.interference(inr_db)),
            level as u64 + 1,
        );
        let curves = engine.scr_sweep(&exp)?;
        for (d, curve) in detectors.iter().zip(&curves) {
            let label = format!("{}_inr{}", d.label, db_label(inr_db));
            rows.extend(curve_rows(&label, curve));
        }
    }

    if cfg.ideal_bound {
        for &scr_db in &grid {
            let pd = ideal_pd(cfg.design_pfa, db_to_linear(scr_db))?;
            rows.push(analytic_row("ideal", None, scr_db, pd));
        }
    }
    Ok(rows)
}

/// Empirical Pfa as a clutter edge sweeps the window, per detector.
pub fn regulation_rows(cfg: &RunConfig, engine: &Engine) -> Result<Vec<RegulationRow>> {
    cfg.validate()?;
    let clutter = cfg.clutter()?;
    let detectors = resolve_detectors(cfg, engine)?;
    let reg = RegulationSpec {
        boost_db: cfg.boost_db,
        runs: cfg.runs,
        design_pfa: cfg.design_pfa,
        affected_counts: cfg
            .affected_cells
            .clone()
            .unwrap_or_else(|| (0..=cfg.window).collect()),
    };
    let mut rows = Vec::new();
    for (i, d) in detectors.iter().enumerate() {
        let curve = engine.pfa_regulation_curve(
            &d.spec,
            &clutter,
            &reg,
            mix_keys(&[cfg.seed, i as u64]),
        )?;
        rows.extend(curve.points.iter().map(|p| RegulationRow {
            detector: d.label.clone(),
            affected_cells: p.abscissa as usize,
            pfa_hat: p.estimate.p_hat,
            se: p.estimate.standard_error,
            design_pfa: cfg.design_pfa,
            boost_db: cfg.boost_db,
            runs: p.estimate.runs,
        }));
    }
    Ok(rows)
}

/// Writes rows as CSV (header always present) or a JSON array.
pub fn write_rows<T: TableRow, W: Write>(
    rows: &[T],
    format: OutputFormat,
    mut out: W,
) -> Result<()> {
    let io_err = |e: &dyn std::fmt::Display| Error::config(format!("cannot write output: {e}"));
    match format {
        OutputFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(out);
            w.write_record(T::HEADER).map_err(|e| io_err(&e))?;
            for r in rows {
                w.serialize(r).map_err(|e| io_err(&e))?;
            }
            w.flush().map_err(|e| io_err(&e))?;
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, rows).map_err(|e| io_err(&e))?;
            writeln!(out).map_err(|e| io_err(&e))?;
        }
    }
    Ok(())
}

/// A serializable output row with a fixed column order.
pub trait TableRow: Serialize {
    const HEADER: &'static [&'static str];
}

impl TableRow for PdRow {
    const HEADER: &'static [&'static str] = &[
        "detector", "stat", "k", "scr_db", "pd_hat", "se", "ci_lo", "ci_hi", "runs", "source",
    ];
}

impl TableRow for RegulationRow {
    const HEADER: &'static [&'static str] = &[
        "detector",
        "affected_cells",
        "pfa_hat",
        "se",
        "design_pfa",
        "boost_db",
        "runs",
    ];
}
