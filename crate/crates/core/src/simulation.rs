//! Monte Carlo estimation of detection and false-alarm probabilities.
//!
//! Every trial draws from its own [`RandomStream`] substream keyed by the
//! experiment seed, the detector's identity, the grid point and the trial
//! index. Trials are grouped into fixed-size chunks that run on a rayon pool
//! and only integer detection counts are reduced, so results are identical
//! for any worker count.
//!
//! Draw order within a trial is: interferer placement (if random), then the
//! `N` reference cells in range order, then the CUT.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{ca_threshold, min_threshold, os_threshold, SolverSettings};
use crate::detector::{statistic_unchecked, DetectorSpec, StatKind};
use crate::error::{Error, Result};
use crate::stats::{db_to_linear, mix_keys, ClutterModel, RandomStream, StreamRng, TargetContext};

const CHUNK: u64 = 4096;

/// Two-sided 95% normal quantile used for reported confidence intervals.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Where interfering targets sit within the CRP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Placement {
    /// 1-based CRP indices, distinct, within `1..=N`.
    Fixed(Vec<usize>),
    /// A fresh uniformly random set of distinct cells every trial.
    RandomUniform,
}

/// Independent Swerling I interferers inserted into the reference window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferenceSpec {
    pub count: usize,
    /// Interference-to-clutter ratio in dB.
    pub inr_db: f64,
    pub placement: Placement,
}

impl InterferenceSpec {
    pub fn none() -> Self {
        Self {
            count: 0,
            inr_db: 0.0,
            placement: Placement::RandomUniform,
        }
    }

    pub fn random(count: usize, inr_db: f64) -> Self {
        Self {
            count,
            inr_db,
            placement: Placement::RandomUniform,
        }
    }

    pub fn is_none(&self) -> bool {
        self.count == 0
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !self.inr_db.is_finite() {
            return Err(Error::domain("interference INR must be finite"));
        }
        if self.count > n {
            return Err(Error::domain(format!(
                "{} interferers do not fit in a window of {n} cells",
                self.count
            )));
        }
        if let Placement::Fixed(idx) = &self.placement {
            if idx.len() != self.count {
                return Err(Error::domain(format!(
                    "fixed placement lists {} cells but count is {}",
                    idx.len(),
                    self.count
                )));
            }
            let mut sorted = idx.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != idx.len() {
                return Err(Error::domain("fixed interferer indices must be distinct"));
            }
            if idx.iter().any(|&i| i < 1 || i > n) {
                return Err(Error::domain(format!(
                    "fixed interferer indices must lie in 1..={n}"
                )));
            }
        }
        Ok(())
    }
}

impl Default for InterferenceSpec {
    fn default() -> Self {
        Self::none()
    }
}

/// A binomial proportion estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdEstimate {
    pub p_hat: f64,
    /// `sqrt(p̂(1 - p̂)/runs)`.
    pub standard_error: f64,
    pub runs: u64,
    pub successes: u64,
}

impl PdEstimate {
    pub fn from_counts(successes: u64, runs: u64) -> Self {
        assert!(runs > 0 && successes <= runs);
        let p_hat = successes as f64 / runs as f64;
        Self {
            p_hat,
            standard_error: (p_hat * (1.0 - p_hat) / runs as f64).sqrt(),
            runs,
            successes,
        }
    }

    /// Normal-approximation interval `p̂ ± z·SE`, clipped to `[0, 1]`.
    pub fn confidence_interval(&self, z: f64) -> (f64, f64) {
        let half = z * self.standard_error;
        ((self.p_hat - half).max(0.0), (self.p_hat + half).min(1.0))
    }

    /// Whether `p` lies within `sigmas` standard errors of the estimate.
    /// A zero-count estimate uses the SE implied by `p` itself.
    pub fn agrees_with(&self, p: f64, sigmas: f64) -> bool {
        let se = self
            .standard_error
            .max((p * (1.0 - p) / self.runs as f64).sqrt());
        (self.p_hat - p).abs() <= sigmas * se
    }
}

/// The clutter-edge experiment: `j` cells carry clutter raised by `boost_db`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegulationSpec {
    pub boost_db: f64,
    pub runs: u64,
    pub design_pfa: f64,
    /// Values of `j` to evaluate, each in `0..=N`.
    pub affected_counts: Vec<usize>,
}

impl RegulationSpec {
    /// Sweep `j = 0..=N` at a 10 dB boost.
    pub fn full(n: usize, design_pfa: f64, runs: u64) -> Self {
        Self {
            boost_db: 10.0,
            runs,
            design_pfa,
            affected_counts: (0..=n).collect(),
        }
    }
}

/// A batch of Pd curves over a grid of SCR values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    /// Detectors with resolved thresholds.
    pub detectors: Vec<DetectorSpec>,
    pub clutter: ClutterModel,
    pub scr_grid_db: Vec<f64>,
    pub interference: Option<InterferenceSpec>,
    pub runs: u64,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.scr_grid_db.is_empty() {
            return Err(Error::domain("SCR grid is empty"));
        }
        if self.scr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::domain("SCR grid values must be finite"));
        }
        if self.runs < 1 {
            return Err(Error::domain("at least one run is required"));
        }
        if let Some(i) = &self.interference {
            for d in &self.detectors {
                i.validate(d.window_length())?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub abscissa: f64,
    pub estimate: PdEstimate,
}

/// One detector's estimates along an experiment grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub detector: DetectorSpec,
    pub points: Vec<CurvePoint>,
}

/// Closed-form threshold for a design false-alarm probability, when one
/// exists. The geometric mean has none; use [`Engine::calibrate_threshold_mc`].
pub fn resolve_threshold(stat: StatKind, n: usize, design_pfa: f64) -> Result<f64> {
    match stat {
        StatKind::Sum => ca_threshold(design_pfa, n),
        StatKind::OrderStatistic(k) => os_threshold(design_pfa, n, k, &SolverSettings::default()),
        StatKind::Minimum => min_threshold(design_pfa, n),
        StatKind::GeometricMean => Err(Error::domain(
            "the geometric-mean detector has no closed-form threshold",
        )),
    }
}

/// Stable 64-bit identity of a detector specification.
pub fn detector_fingerprint(spec: &DetectorSpec) -> u64 {
    let stat_code = match spec.stat() {
        StatKind::Sum => 1,
        StatKind::OrderStatistic(k) => 2 | (k as u64) << 8,
        StatKind::GeometricMean => 3,
        StatKind::Minimum => 4,
    };
    mix_keys(&[
        stat_code,
        spec.window_length() as u64,
        spec.guard_cells() as u64,
        spec.threshold_multiplier().to_bits(),
    ])
}

/// Per-cell means for one trial: `N` reference cells and the CUT.
#[derive(Debug, Clone, PartialEq)]
struct CellMeans {
    crp: Vec<f64>,
    cut: f64,
}

/// How a trial lays out the cell means.
#[derive(Debug, Clone)]
enum Scenario {
    /// Homogeneous clutter plus optional interferers.
    Interference {
        clutter_mean: f64,
        cut_mean: f64,
        interferer_mean: f64,
        interference: InterferenceSpec,
    },
    /// Precomputed, trial-invariant means.
    Static(CellMeans),
}

/// Reusable per-worker buffers.
struct TrialKernel<'a> {
    spec: &'a DetectorSpec,
    scenario: &'a Scenario,
    means: CellMeans,
    crp: Vec<f64>,
    pool: Vec<usize>,
}

impl<'a> TrialKernel<'a> {
    fn new(spec: &'a DetectorSpec, scenario: &'a Scenario) -> Self {
        let n = spec.window_length();
        let means = match scenario {
            Scenario::Static(m) => m.clone(),
            Scenario::Interference {
                clutter_mean,
                cut_mean,
                ..
            } => CellMeans {
                crp: vec![*clutter_mean; n],
                cut: *cut_mean,
            },
        };
        Self {
            spec,
            scenario,
            means,
            crp: vec![0.0; n],
            pool: (0..n).collect(),
        }
    }

    /// Places interferers for this trial, drawing from `rng` if random.
    fn place(&mut self, rng: &mut StreamRng) {
        let Scenario::Interference {
            clutter_mean,
            interferer_mean,
            interference,
            ..
        } = self.scenario
        else {
            return;
        };
        if interference.count == 0 {
            return;
        }
        let n = self.means.crp.len();
        self.means.crp.iter_mut().for_each(|m| *m = *clutter_mean);
        match &interference.placement {
            Placement::Fixed(idx) => {
                for &i in idx {
                    self.means.crp[i - 1] = *interferer_mean;
                }
            }
            Placement::RandomUniform => {
                // Partial Fisher-Yates over a pool reset to identity.
                for (i, p) in self.pool.iter_mut().enumerate() {
                    *p = i;
                }
                for i in 0..interference.count {
                    let j = i + rng.below(n - i);
                    self.pool.swap(i, j);
                    self.means.crp[self.pool[i]] = *interferer_mean;
                }
            }
        }
    }

    /// Returns the test ratio inputs `(z0, g)` for one trial.
    fn draw(&mut self, stream: &RandomStream) -> (f64, f64) {
        let mut rng = stream.rng();
        self.place(&mut rng);
        for (z, m) in self.crp.iter_mut().zip(&self.means.crp) {
            *z = rng.standard_exponential() * m;
        }
        let z0 = rng.standard_exponential() * self.means.cut;
        let g = statistic_unchecked(self.spec.stat(), &mut self.crp);
        (z0, g)
    }

    fn detect(&mut self, stream: &RandomStream) -> bool {
        let (z0, g) = self.draw(stream);
        z0 > self.spec.threshold_multiplier() * g
    }
}

fn interference_scenario(
    clutter: &ClutterModel,
    target: Option<&TargetContext>,
    interference: &InterferenceSpec,
) -> Scenario {
    let scr = target.map_or(0.0, |t| t.scr_linear());
    let inr = db_to_linear(interference.inr_db);
    Scenario::Interference {
        clutter_mean: clutter.mean(),
        cut_mean: (1.0 + scr) * clutter.mean(),
        interferer_mean: (1.0 + inr) * clutter.mean(),
        interference: interference.clone(),
    }
}

/// Cell means for the clutter-edge sweep with `j` affected cells.
///
/// The edge enters from the far end of the leading bank and moves inward;
/// once `j > N/2` it has crossed the CUT, which then carries boosted clutter,
/// and continues into the lagging bank from its inner cell outward.
fn regulation_means(n: usize, j: usize, clutter_mean: f64, boosted_mean: f64) -> CellMeans {
    let m = n / 2;
    let mut crp = vec![clutter_mean; n];
    // Leading bank occupies CRP indices m..n; far cell is n-1.
    for cell in crp[n - j.min(m)..].iter_mut() {
        *cell = boosted_mean;
    }
    let cut = if j > m {
        // Lagging bank occupies 0..m; inner cell is m-1.
        let spill = j - m;
        for cell in crp[m - spill..m].iter_mut() {
            *cell = boosted_mean;
        }
        boosted_mean
    } else {
        clutter_mean
    };
    CellMeans { crp, cut }
}

/// Runs a single trial of the detector and reports whether it fired.
///
/// `target = None` simulates `H0`.
pub fn run_trial(
    spec: &DetectorSpec,
    clutter: &ClutterModel,
    target: Option<&TargetContext>,
    interference: &InterferenceSpec,
    stream: &RandomStream,
) -> Result<bool> {
    interference.validate(spec.window_length())?;
    let scenario = interference_scenario(clutter, target, interference);
    let mut kernel = TrialKernel::new(spec, &scenario);
    Ok(kernel.detect(stream))
}

/// Parallel Monte Carlo executor.
pub struct Engine {
    pool: rayon::ThreadPool,
    workers: usize,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine")
            .field("workers", &self.workers)
            .finish()
    }
}

impl Engine {
    pub fn new(workers: usize) -> Result<Self> {
        if workers < 1 {
            return Err(Error::domain("worker count must be at least 1"));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::domain(format!("cannot start worker pool: {e}")))?;
        Ok(Self { pool, workers })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    fn count_detections(
        &self,
        spec: &DetectorSpec,
        scenario: &Scenario,
        runs: u64,
        base: RandomStream,
    ) -> u64 {
        let chunks = runs.div_ceil(CHUNK);
        self.pool.install(|| {
            (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut kernel = TrialKernel::new(spec, scenario);
                    let start = c * CHUNK;
                    let end = (start + CHUNK).min(runs);
                    (start..end)
                        .filter(|&t| kernel.detect(&base.substream(&[t])))
                        .count() as u64
                })
                .sum()
        })
    }

    fn estimate_on(
        &self,
        spec: &DetectorSpec,
        scenario: &Scenario,
        runs: u64,
        base: RandomStream,
    ) -> Result<PdEstimate> {
        if runs < 1 {
            return Err(Error::domain("at least one run is required"));
        }
        let hits = self.count_detections(spec, scenario, runs, base);
        Ok(PdEstimate::from_counts(hits, runs))
    }

    /// Fraction of `runs` independent trials that declare a detection.
    /// `target = None` estimates the false-alarm probability.
    pub fn estimate_pd(
        &self,
        spec: &DetectorSpec,
        clutter: &ClutterModel,
        target: Option<&TargetContext>,
        interference: &InterferenceSpec,
        runs: u64,
        seed: u64,
    ) -> Result<PdEstimate> {
        interference.validate(spec.window_length())?;
        let scenario = interference_scenario(clutter, target, interference);
        let scr_key = target.map_or(u64::MAX, |t| t.scr_linear().to_bits());
        let base = RandomStream::new(seed, 0).substream(&[detector_fingerprint(spec), scr_key]);
        self.estimate_on(spec, &scenario, runs, base)
    }

    /// Empirical `(1 - design_pfa)` quantile of the `H0` ratio `Z0/g`.
    ///
    /// Requires `runs ≥ 100/design_pfa` so that about a hundred samples lie
    /// beyond the quantile. Holds all ratios in memory (8 bytes per run).
    pub fn calibrate_threshold_mc(
        &self,
        stat: StatKind,
        n: usize,
        design_pfa: f64,
        runs: u64,
        seed: u64,
    ) -> Result<f64> {
        if !(design_pfa > 0.0 && design_pfa <= 1.0) {
            return Err(Error::domain(format!(
                "design Pfa must lie in (0, 1], got {design_pfa}"
            )));
        }
        let spec = DetectorSpec::new(stat, n, 0, 0.0)?;
        if design_pfa == 1.0 {
            return Ok(0.0);
        }
        let required = (100.0 / design_pfa).ceil() as u64;
        if runs < required {
            return Err(Error::domain(format!(
                "calibrating Pfa {design_pfa} needs at least {required} runs, got {runs}"
            )));
        }

        let clutter = ClutterModel::default();
        let scenario = interference_scenario(&clutter, None, &InterferenceSpec::none());
        let base = RandomStream::new(seed, 1).substream(&[detector_fingerprint(&spec)]);
        let chunks = runs.div_ceil(CHUNK);
        let mut ratios: Vec<f64> = self.pool.install(|| {
            (0..chunks)
                .into_par_iter()
                .flat_map_iter(|c| {
                    let mut kernel = TrialKernel::new(&spec, &scenario);
                    let start = c * CHUNK;
                    let end = (start + CHUNK).min(runs);
                    (start..end)
                        .map(|t| {
                            let (z0, g) = kernel.draw(&base.substream(&[t]));
                            if g > 0.0 {
                                z0 / g
                            } else {
                                f64::INFINITY
                            }
                        })
                        .collect::<Vec<_>>()
                })
                .collect()
        });

        // τ such that exactly floor(pfa·runs) ratios exceed it.
        let exceed = (design_pfa * runs as f64).floor() as usize;
        let idx = ratios.len() - exceed - 1;
        let (_, tau, _) = ratios.select_nth_unstable_by(idx, f64::total_cmp);
        Ok(*tau)
    }

    /// Empirical false-alarm probability as a clutter edge sweeps across the
    /// window, for each affected-cell count `j` in `reg.affected_counts`.
    pub fn pfa_regulation_curve(
        &self,
        spec: &DetectorSpec,
        clutter: &ClutterModel,
        reg: &RegulationSpec,
        seed: u64,
    ) -> Result<Curve> {
        let n = spec.window_length();
        if !(reg.boost_db >= 0.0 && reg.boost_db.is_finite()) {
            return Err(Error::domain("power boost must be nonnegative"));
        }
        if reg.runs < 1 {
            return Err(Error::domain("at least one run is required"));
        }
        if let Some(&j) = reg.affected_counts.iter().find(|&&j| j > n) {
            return Err(Error::domain(format!("affected count {j} exceeds N = {n}")));
        }
        let boosted_mean = db_to_linear(reg.boost_db) * clutter.mean();
        let id = detector_fingerprint(spec);
        let points = reg
            .affected_counts
            .iter()
            .map(|&j| {
                let scenario =
                    Scenario::Static(regulation_means(n, j, clutter.mean(), boosted_mean));
                let base = RandomStream::new(seed, 2).substream(&[id, j as u64]);
                Ok(CurvePoint {
                    abscissa: j as f64,
                    estimate: self.estimate_on(spec, &scenario, reg.runs, base)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Curve {
            detector: *spec,
            points,
        })
    }

    /// Monte Carlo Pd at every grid SCR for every detector. Substreams are
    /// keyed by detector identity and position, so duplicate detectors get
    /// independent (statistically equal) curves.
    pub fn scr_sweep(&self, experiment: &ExperimentSpec) -> Result<Vec<Curve>> {
        experiment.validate()?;
        let interference = experiment.interference.clone().unwrap_or_default();
        let root = RandomStream::new(experiment.seed, 3);
        experiment
            .detectors
            .iter()
            .enumerate()
            .map(|(d, spec)| {
                let det_stream = root.substream(&[detector_fingerprint(spec), d as u64]);
                let points = experiment
                    .scr_grid_db
                    .iter()
                    .enumerate()
                    .map(|(i, &scr_db)| {
                        let target = TargetContext::from_db(scr_db)?;
                        let scenario = interference_scenario(
                            &experiment.clutter,
                            Some(&target),
                            &interference,
                        );
                        let base = det_stream.substream(&[i as u64]);
                        Ok(CurvePoint {
                            abscissa: scr_db,
                            estimate: self.estimate_on(spec, &scenario, experiment.runs, base)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Curve {
                    detector: *spec,
                    points,
                })
            })
            .collect()
    }
}

/// Convenience wrapper: [`Engine::estimate_pd`] on a fresh pool.
pub fn estimate_pd(
    spec: &DetectorSpec,
    clutter: &ClutterModel,
    target: Option<&TargetContext>,
    interference: &InterferenceSpec,
    runs: u64,
    seed: u64,
    workers: usize,
) -> Result<PdEstimate> {
    Engine::new(workers)?.estimate_pd(spec, clutter, target, interference, runs, seed)
}
