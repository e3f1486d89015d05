//! Closed-form detection and false-alarm probabilities, and the threshold
//! solvers that invert them.
//!
//! All three detectors assume exponential clutter and a Swerling I target
//! with signal-to-clutter ratio `S`.
//!
//! * Cell averaging: `Pd = [1 + τ/(1+S)]^(-N)`, `Pfa = (1+τ)^(-N)`.
//! * k-th order statistic, with `u = τ/(1+S)`:
//!   `Pd = N!/(N-k)! · Γ(u+N-k+1)/Γ(u+N+1)`; `Pfa` is the same with `S = 0`.
//! * Fixed threshold with known clutter rate `λ`: threshold `-ln(Pfa)/λ`.
//!   Under `H1` the CUT has rate `λ/(1+S)`, so exceeding that threshold has
//!   probability `exp(ln(Pfa)/(1+S)) = Pfa^(1/(1+S))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Controls for the bracketing threshold solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Required `|f(x) - target| / target` at the returned point.
    pub relative_tolerance: f64,
    /// Budget shared by bracket growth and refinement.
    pub max_iterations: usize,
    /// Initial upper end of the bracket `[0, hi]`, doubled until it brackets.
    pub bracket_hi_initial: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            relative_tolerance: 1e-12,
            max_iterations: 200,
            bracket_hi_initial: 1.0,
        }
    }
}

impl SolverSettings {
    fn validate(&self) -> Result<()> {
        if !(self.relative_tolerance > 0.0) {
            return Err(Error::domain("solver tolerance must be positive"));
        }
        if self.max_iterations < 1 {
            return Err(Error::domain("solver needs at least one iteration"));
        }
        if !(self.bracket_hi_initial > 0.0 && self.bracket_hi_initial.is_finite()) {
            return Err(Error::domain("initial bracket must be positive and finite"));
        }
        Ok(())
    }
}

fn check_probability(p: f64, what: &str) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::domain(format!("{what} must lie in (0, 1], got {p}")));
    }
    Ok(())
}

fn check_order(n: usize, k: usize) -> Result<()> {
    if n < 1 || k < 1 || k > n {
        return Err(Error::domain(format!(
            "order statistic index must satisfy 1 <= k <= N, got k = {k}, N = {n}"
        )));
    }
    Ok(())
}

/// Cell-averaging detection probability.
pub fn ca_pd(tau: f64, scr: f64, n: usize) -> f64 {
    (-(n as f64) * (tau / (1.0 + scr)).ln_1p()).exp()
}

/// Cell-averaging false-alarm probability, `ca_pd` at `S = 0`.
pub fn ca_pfa(tau: f64, n: usize) -> f64 {
    ca_pd(tau, 0.0, n)
}

/// The unique `τ` with `ca_pfa(τ, N) = pfa`, i.e. `pfa^(-1/N) - 1`.
pub fn ca_threshold(pfa: f64, n: usize) -> Result<f64> {
    check_probability(pfa, "design Pfa")?;
    if n < 1 {
        return Err(Error::domain("window length must be at least 1"));
    }
    Ok((-pfa.ln() / n as f64).exp_m1())
}

/// Order-statistic detection probability, evaluated entirely through
/// log-gamma differences.
pub fn os_pd(tau: f64, scr: f64, n: usize, k: usize) -> Result<f64> {
    check_order(n, k)?;
    let u = tau / (1.0 + scr);
    Ok(os_tail(u, n, k))
}

/// Order-statistic false-alarm probability, `os_pd` at `S = 0`.
pub fn os_pfa(tau: f64, n: usize, k: usize) -> Result<f64> {
    os_pd(tau, 0.0, n, k)
}

/// The log-gamma difference loses about `eps·(u+N)·ln(u+N)` to cancellation.
/// Past `u + N = 64` that noise can exceed the solver's 1e-12 residual, so
/// the tail is summed term by term in log space whenever `k` is small enough
/// for that to be cheap.
const LGAMMA_CLEAN_SPAN: f64 = 64.0;
const MAX_PRODUCT_TERMS: usize = 256;

fn os_tail(u: f64, n: usize, k: usize) -> f64 {
    if u + n as f64 > LGAMMA_CLEAN_SPAN && k <= MAX_PRODUCT_TERMS {
        let log_p: f64 = (n - k + 1..=n).map(|i| -(u / i as f64).ln_1p()).sum();
        return log_p.exp().min(1.0);
    }
    let n = n as f64;
    let k = k as f64;
    let log_p = libm::lgamma(n + 1.0) - libm::lgamma(n - k + 1.0) + libm::lgamma(u + n - k + 1.0)
        - libm::lgamma(u + n + 1.0);
    log_p.exp().min(1.0)
}

/// Numerically inverts `os_pfa` in `τ`.
pub fn os_threshold(pfa: f64, n: usize, k: usize, settings: &SolverSettings) -> Result<f64> {
    check_probability(pfa, "design Pfa")?;
    check_order(n, k)?;
    if pfa == 1.0 {
        return Ok(0.0);
    }
    invert_decreasing(|tau| os_tail(tau, n, k), pfa, settings)
}

/// Threshold for the minimum (`k = 1`) detector. The CRP minimum is
/// exponential with rate `Nλ`, so `Pfa = N/(N+τ)` inverts exactly.
pub fn min_threshold(pfa: f64, n: usize) -> Result<f64> {
    check_probability(pfa, "design Pfa")?;
    check_order(n, 1)?;
    Ok(n as f64 * (1.0 / pfa - 1.0))
}

/// Fixed threshold `-ln(pfa)/λ` for a detector that knows the clutter rate.
pub fn ideal_threshold(pfa: f64, rate: f64) -> Result<f64> {
    check_probability(pfa, "design Pfa")?;
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::domain(format!(
            "clutter rate must be positive, got {rate}"
        )));
    }
    Ok(-pfa.ln() / rate)
}

/// Detection probability of the fixed-threshold detector, `pfa^(1/(1+S))`.
pub fn ideal_pd(pfa: f64, scr: f64) -> Result<f64> {
    check_probability(pfa, "design Pfa")?;
    if !(scr >= 0.0) {
        return Err(Error::domain(format!("SCR must be nonnegative, got {scr}")));
    }
    Ok((pfa.ln() / (1.0 + scr)).exp())
}

/// Finds `x ≥ 0` with `f(x) = target` for a continuous, strictly decreasing
/// `f` with `f(0) ≥ target > 0`.
///
/// The bracket `[0, hi]` grows by doubling until `f(hi) < target`, then
/// shrinks by alternating Illinois regula falsi and bisection steps.
pub fn invert_decreasing<F>(f: F, target: f64, settings: &SolverSettings) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    settings.validate()?;
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::domain(format!(
            "solver target must be positive, got {target}"
        )));
    }
    let tol = settings.relative_tolerance;
    let converged = |fx: f64| ((fx - target) / target).abs() <= tol;

    let mut lo = 0.0;
    let mut f_lo = f(lo);
    if converged(f_lo) {
        return Ok(lo);
    }
    if f_lo < target {
        return Err(Error::domain(format!(
            "target {target} exceeds the function value {f_lo} at zero"
        )));
    }

    let mut iterations = 0;
    let mut hi = settings.bracket_hi_initial;
    let mut f_hi = f(hi);
    while f_hi >= target {
        if converged(f_hi) {
            return Ok(hi);
        }
        iterations += 1;
        if iterations >= settings.max_iterations || !hi.is_finite() {
            return Err(Error::SolverFailure { lo, hi, iterations });
        }
        lo = hi;
        f_lo = f_hi;
        hi *= 2.0;
        f_hi = f(hi);
    }

    // Residuals g = f - target keep g(lo) > 0 > g(hi). Odd steps take the
    // Illinois secant point, even steps bisect, so the bracket at least
    // halves every two iterations.
    let mut g_lo = f_lo - target;
    let mut g_hi = f_hi - target;
    let mut last_side = 0i8;
    let mut step = 0usize;
    while iterations < settings.max_iterations {
        iterations += 1;
        step += 1;
        let mid = 0.5 * (lo + hi);
        let x = if step % 2 == 1 {
            let secant = hi - g_hi * (hi - lo) / (g_hi - g_lo);
            if secant > lo && secant < hi {
                secant
            } else {
                mid
            }
        } else {
            mid
        };
        if x <= lo || x >= hi {
            // lo and hi are adjacent floats.
            break;
        }
        let fx = f(x);
        if converged(fx) {
            return Ok(x);
        }
        let gx = fx - target;
        if gx > 0.0 {
            lo = x;
            g_lo = gx;
            if last_side == 1 {
                g_hi *= 0.5;
            }
            last_side = 1;
        } else {
            hi = x;
            g_hi = gx;
            if last_side == -1 {
                g_lo *= 0.5;
            }
            last_side = -1;
        }
    }
    Err(Error::SolverFailure { lo, hi, iterations })
}
