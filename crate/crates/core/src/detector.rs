//! Sliding-window geometry and the generic threshold test.
//!
//! A window around the cell under test (CUT) looks like
//!
//! ```text
//!   Z_1 .. Z_m | G .. G | CUT | G .. G | Z_{m+1} .. Z_N
//!    lagging     guard          guard      leading
//! ```
//!
//! with `m = N/2`. The reference cells form the clutter range profile (CRP),
//! which a scale-invariant statistic `g` compresses into one clutter level.
//! The CUT is declared a detection when `Z_0 > τ·g(Z_1, ..., Z_N)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default total number of guard cells (four per side).
pub const DEFAULT_GUARD_CELLS: usize = 8;

/// The clutter statistic `g` applied to the reference cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StatKind {
    /// Cell averaging: the sum of all reference cells.
    Sum,
    /// The k-th smallest reference cell, `1 ≤ k ≤ N`.
    OrderStatistic(usize),
    /// `(Π Z_j)^(1/N)`.
    GeometricMean,
    /// The smallest reference cell, i.e. `OrderStatistic(1)`.
    Minimum,
}

impl StatKind {
    /// Short label used in output files: `ca`, `os31`, `gm`, `min`.
    pub fn label(&self) -> String {
        match self {
            StatKind::Sum => "ca".to_string(),
            StatKind::OrderStatistic(k) => format!("os{k}"),
            StatKind::GeometricMean => "gm".to_string(),
            StatKind::Minimum => "min".to_string(),
        }
    }

    /// Order-statistic index, if the statistic is one.
    pub fn order_index(&self) -> Option<usize> {
        match *self {
            StatKind::OrderStatistic(k) => Some(k),
            StatKind::Minimum => Some(1),
            _ => None,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if let StatKind::OrderStatistic(k) = *self {
            if k < 1 || k > n {
                return Err(Error::domain(format!(
                    "order statistic index k = {k} must satisfy 1 <= k <= N = {n}"
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for StatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Outcome of the binary test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hypothesis {
    /// No target in the CUT.
    H0,
    /// Target present.
    H1,
}

/// Per-cell result of sliding a detector over a range profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellDecision {
    /// The cell is too close to an edge for a full window.
    Untested,
    Tested(Hypothesis),
}

impl CellDecision {
    pub fn is_detection(&self) -> bool {
        matches!(self, CellDecision::Tested(Hypothesis::H1))
    }
}

/// A fully specified sliding-window detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorSpec {
    stat: StatKind,
    window_length: usize,
    guard_cells: usize,
    threshold_multiplier: f64,
}

impl DetectorSpec {
    pub fn new(
        stat: StatKind,
        window_length: usize,
        guard_cells: usize,
        threshold_multiplier: f64,
    ) -> Result<Self> {
        if window_length < 2 || window_length % 2 != 0 {
            return Err(Error::domain(format!(
                "window length N must be even and at least 2, got {window_length}"
            )));
        }
        if guard_cells % 2 != 0 {
            return Err(Error::domain(format!(
                "guard cell count must be even, got {guard_cells}"
            )));
        }
        if !(threshold_multiplier.is_finite() && threshold_multiplier >= 0.0) {
            return Err(Error::domain(format!(
                "threshold multiplier must be nonnegative and finite, got {threshold_multiplier}"
            )));
        }
        stat.validate(window_length)?;
        Ok(Self {
            stat,
            window_length,
            guard_cells,
            threshold_multiplier,
        })
    }

    pub fn stat(&self) -> StatKind {
        self.stat
    }

    pub fn window_length(&self) -> usize {
        self.window_length
    }

    pub fn guard_cells(&self) -> usize {
        self.guard_cells
    }

    pub fn threshold_multiplier(&self) -> f64 {
        self.threshold_multiplier
    }

    pub fn with_threshold(mut self, tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::domain(format!(
                "threshold multiplier must be nonnegative and finite, got {tau}"
            )));
        }
        self.threshold_multiplier = tau;
        Ok(self)
    }

    /// Number of reference cells on each side, `m = N/2`.
    pub fn half_window(&self) -> usize {
        self.window_length / 2
    }

    /// Distance from the CUT to the outermost reference cell on one side.
    pub fn reach(&self) -> usize {
        self.half_window() + self.guard_cells / 2
    }
}

/// One window snapshot: the CUT and the two reference banks. Guard cells
/// are not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub cut: f64,
    /// `Z_1 .. Z_m`.
    pub lagging: Vec<f64>,
    /// `Z_{m+1} .. Z_N`.
    pub leading: Vec<f64>,
}

impl Window {
    pub fn new(cut: f64, lagging: Vec<f64>, leading: Vec<f64>) -> Result<Self> {
        if cut < 0.0 || lagging.iter().chain(&leading).any(|&z| !(z >= 0.0)) {
            return Err(Error::domain("window values must be nonnegative"));
        }
        Ok(Self {
            cut,
            lagging,
            leading,
        })
    }

    /// Extracts the window centred on `index`, or `None` when it would run off
    /// either end of the profile.
    pub fn extract(profile: &[f64], index: usize, spec: &DetectorSpec) -> Option<Self> {
        let reach = spec.reach();
        let half_guard = spec.guard_cells / 2;
        if index < reach || index + reach >= profile.len() {
            return None;
        }
        Some(Self {
            cut: profile[index],
            lagging: profile[index - reach..index - half_guard].to_vec(),
            leading: profile[index + half_guard + 1..=index + reach].to_vec(),
        })
    }

    pub fn window_length(&self) -> usize {
        self.lagging.len() + self.leading.len()
    }

    /// The CRP `Z_1 .. Z_N` in range order.
    pub fn crp(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.window_length());
        v.extend_from_slice(&self.lagging);
        v.extend_from_slice(&self.leading);
        v
    }

    pub fn statistic(&self, stat: StatKind) -> Result<f64> {
        let mut crp = self.crp();
        clutter_statistic_in_place(stat, &mut crp)
    }

    pub fn decide(&self, spec: &DetectorSpec) -> Result<Hypothesis> {
        let g = self.statistic(spec.stat)?;
        Ok(decide(self.cut, g, spec.threshold_multiplier))
    }
}

/// Evaluates `g(Z_1, ..., Z_N)` on a copy of `crp`.
pub fn clutter_statistic(stat: StatKind, crp: &[f64]) -> Result<f64> {
    let mut buf = crp.to_vec();
    clutter_statistic_in_place(stat, &mut buf)
}

/// Evaluates `g` and may reorder `crp` (order statistics select in place).
pub fn clutter_statistic_in_place(stat: StatKind, crp: &mut [f64]) -> Result<f64> {
    if crp.is_empty() {
        return Err(Error::domain("clutter range profile is empty"));
    }
    stat.validate(crp.len())?;
    Ok(statistic_unchecked(stat, crp))
}

/// Hot-path evaluation; `crp` must be nonempty and `k` in range.
#[inline]
pub(crate) fn statistic_unchecked(stat: StatKind, crp: &mut [f64]) -> f64 {
    match stat {
        StatKind::Sum => {
            // p1 + p2: compress each half, then combine.
            let (lagging, leading) = crp.split_at(crp.len() / 2);
            lagging.iter().sum::<f64>() + leading.iter().sum::<f64>()
        }
        StatKind::OrderStatistic(k) => {
            let (_, kth, _) = crp.select_nth_unstable_by(k - 1, f64::total_cmp);
            *kth
        }
        StatKind::Minimum => crp.iter().copied().fold(f64::INFINITY, f64::min),
        StatKind::GeometricMean => {
            if crp.contains(&0.0) {
                return 0.0;
            }
            let mean_log = crp.iter().map(|z| z.ln()).sum::<f64>() / crp.len() as f64;
            mean_log.exp()
        }
    }
}

/// The binary test: `H1` iff `z0 > τ·g`. Ties resolve to `H0`.
#[inline]
pub fn decide(z0: f64, g: f64, tau: f64) -> Hypothesis {
    if z0 > tau * g {
        Hypothesis::H1
    } else {
        Hypothesis::H0
    }
}

/// Slides the detector over a range profile. Cells within `N/2 + guard/2`
/// of either end are [`CellDecision::Untested`].
pub fn slide(profile: &[f64], spec: &DetectorSpec) -> Result<Vec<CellDecision>> {
    let needed = spec.window_length + spec.guard_cells + 1;
    if profile.len() < needed {
        return Err(Error::domain(format!(
            "profile of length {} is shorter than one full window ({needed} cells)",
            profile.len()
        )));
    }
    if profile.iter().any(|&z| !(z >= 0.0)) {
        return Err(Error::domain("profile values must be nonnegative"));
    }

    let reach = spec.reach();
    let half_guard = spec.guard_cells / 2;
    let mut crp = Vec::with_capacity(spec.window_length);
    let decisions = (0..profile.len())
        .map(|i| {
            if i < reach || i + reach >= profile.len() {
                return CellDecision::Untested;
            }
            crp.clear();
            crp.extend_from_slice(&profile[i - reach..i - half_guard]);
            crp.extend_from_slice(&profile[i + half_guard + 1..=i + reach]);
            let g = statistic_unchecked(spec.stat, &mut crp);
            CellDecision::Tested(decide(profile[i], g, spec.threshold_multiplier))
        })
        .collect();
    Ok(decisions)
}
