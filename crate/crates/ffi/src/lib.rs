//! C ABI over `cfar-core`.
//!
//! Every function returns a [`CfarStatus`] and writes its result through an
//! out-pointer. On failure the message is available from
//! [`cfar_last_error_message`] on the same thread. Detectors are opaque
//! handles created by `cfar_detector_new*` and released with
//! [`cfar_detector_free`].

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cfar_core::analytic::{self, SolverSettings};
use cfar_core::detector::{self, CellDecision, DetectorSpec, Hypothesis, StatKind};
use cfar_core::simulation::{self, resolve_threshold, InterferenceSpec};
use cfar_core::stats::{ClutterModel, TargetContext};
use cfar_core::Error;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfarStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument lies outside the operation's domain.
    Domain = 2,
    /// A root finder did not converge.
    SolverFailure = 3,
    /// A configuration value was rejected.
    Config = 4,
    /// An output buffer has the wrong length.
    BufferSize = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

/// Clutter statistic selector. `k` accompanies `ORDER_STATISTIC`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfarStat {
    Sum = 0,
    OrderStatistic = 1,
    GeometricMean = 2,
    Minimum = 3,
}

/// Monte Carlo estimate of a detection or false-alarm probability.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CfarPdEstimate {
    pub p_hat: f64,
    pub standard_error: f64,
    pub runs: u64,
    pub successes: u64,
}

/// Opaque detector handle.
pub struct CfarDetector {
    spec: DetectorSpec,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: CfarStatus, msg: impl Into<String>) -> CfarStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> CfarStatus {
    let status = match e {
        Error::Domain(_) => CfarStatus::Domain,
        Error::SolverFailure { .. } => CfarStatus::SolverFailure,
        Error::Config(_) => CfarStatus::Config,
    };
    fail(status, e.to_string())
}

/// Runs `f` behind a panic guard and clears the error slot on success.
fn guard(f: impl FnOnce() -> Result<(), CfarStatus>) -> CfarStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CfarStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            fail(CfarStatus::Panic, format!("panic: {msg}"))
        }
    }
}

fn write<T>(out: *mut T, value: T) -> Result<(), CfarStatus> {
    if out.is_null() {
        return Err(fail(CfarStatus::NullPointer, "output pointer is null"));
    }
    // SAFETY: the caller guarantees a non-null `out` points to writable T.
    unsafe { out.write(value) };
    Ok(())
}

/// `stat` arrives as a plain integer so that unknown values from C are an
/// error rather than an invalid enum.
fn stat_kind(stat: i32, k: usize) -> Result<StatKind, CfarStatus> {
    Ok(match stat {
        s if s == CfarStat::Sum as i32 => StatKind::Sum,
        s if s == CfarStat::OrderStatistic as i32 => StatKind::OrderStatistic(k),
        s if s == CfarStat::GeometricMean as i32 => StatKind::GeometricMean,
        s if s == CfarStat::Minimum as i32 => StatKind::Minimum,
        other => {
            return Err(fail(
                CfarStatus::Domain,
                format!("unknown statistic {other}"),
            ))
        }
    })
}

fn handle<'a>(det: *const CfarDetector) -> Result<&'a CfarDetector, CfarStatus> {
    if det.is_null() {
        return Err(fail(CfarStatus::NullPointer, "detector handle is null"));
    }
    // SAFETY: non-null handles come from `cfar_detector_new*` and stay valid
    // until `cfar_detector_free`.
    Ok(unsafe { &*det })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cfar_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null after a
/// successful one. Valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn cfar_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates a detector with an explicit threshold multiplier `tau`. `stat`
/// is a [`CfarStat`] value; `k` is read only for order statistics.
///
/// # Safety
/// `out` must be null or point to writable storage for a handle pointer.
#[no_mangle]
pub unsafe extern "C" fn cfar_detector_new(
    stat: i32,
    k: usize,
    window: usize,
    guard_cells: usize,
    tau: f64,
    out: *mut *mut CfarDetector,
) -> CfarStatus {
    guard(|| {
        let spec =
            DetectorSpec::new(stat_kind(stat, k)?, window, guard_cells, tau).map_err(from_error)?;
        write(out, Box::into_raw(Box::new(CfarDetector { spec })))
    })
}

/// Creates a detector whose threshold meets `design_pfa` in homogeneous
/// clutter. The geometric mean has no closed form and is rejected.
///
/// # Safety
/// As [`cfar_detector_new`].
#[no_mangle]
pub unsafe extern "C" fn cfar_detector_new_for_pfa(
    stat: i32,
    k: usize,
    window: usize,
    guard_cells: usize,
    design_pfa: f64,
    out: *mut *mut CfarDetector,
) -> CfarStatus {
    guard(|| {
        let kind = stat_kind(stat, k)?;
        DetectorSpec::new(kind, window, guard_cells, 0.0).map_err(from_error)?;
        let tau = resolve_threshold(kind, window, design_pfa).map_err(from_error)?;
        let spec = DetectorSpec::new(kind, window, guard_cells, tau).map_err(from_error)?;
        write(out, Box::into_raw(Box::new(CfarDetector { spec })))
    })
}

/// Releases a detector. Null is ignored.
///
/// # Safety
/// `det` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cfar_detector_free(det: *mut CfarDetector) {
    if !det.is_null() {
        // SAFETY: per the contract, `det` came from Box::into_raw.
        drop(unsafe { Box::from_raw(det) });
    }
}

/// # Safety
/// `det` must be a live handle or null; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn cfar_detector_threshold(
    det: *const CfarDetector,
    out: *mut f64,
) -> CfarStatus {
    guard(|| write(out, handle(det)?.spec.threshold_multiplier()))
}

/// Slides the detector along `profile`. `decisions[i]` becomes -1 where the
/// window does not fit, 0 for no target and 1 for a detection.
/// `decisions_len` must equal `len`.
///
/// # Safety
/// `profile` must point to `len` readable doubles and `decisions` to
/// `decisions_len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn cfar_detector_slide(
    det: *const CfarDetector,
    profile: *const f64,
    len: usize,
    decisions: *mut i8,
    decisions_len: usize,
) -> CfarStatus {
    guard(|| {
        let det = handle(det)?;
        if profile.is_null() || decisions.is_null() {
            return Err(fail(
                CfarStatus::NullPointer,
                "profile or decision buffer is null",
            ));
        }
        if decisions_len != len {
            return Err(fail(
                CfarStatus::BufferSize,
                format!("decision buffer holds {decisions_len} cells, profile has {len}"),
            ));
        }
        // SAFETY: lengths and non-nullness checked above; caller guarantees
        // the allocations.
        let profile = unsafe { std::slice::from_raw_parts(profile, len) };
        let out = unsafe { std::slice::from_raw_parts_mut(decisions, len) };
        let cells = detector::slide(profile, &det.spec).map_err(from_error)?;
        for (o, c) in out.iter_mut().zip(cells) {
            *o = match c {
                CellDecision::Untested => -1,
                CellDecision::Tested(Hypothesis::H0) => 0,
                CellDecision::Tested(Hypothesis::H1) => 1,
            };
        }
        Ok(())
    })
}

/// Monte Carlo Pd of `det` against exponential clutter of rate
/// `clutter_rate`. `has_target = 0` estimates the false-alarm probability
/// and ignores `scr_db`. `interferers` random reference cells carry
/// interference `inr_db` above the clutter.
///
/// # Safety
/// `det` must be a live handle or null; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn cfar_estimate_pd(
    det: *const CfarDetector,
    clutter_rate: f64,
    has_target: i32,
    scr_db: f64,
    interferers: usize,
    inr_db: f64,
    runs: u64,
    seed: u64,
    workers: usize,
    out: *mut CfarPdEstimate,
) -> CfarStatus {
    guard(|| {
        let det = handle(det)?;
        let clutter = ClutterModel::new(clutter_rate).map_err(from_error)?;
        let target = if has_target != 0 {
            Some(TargetContext::from_db(scr_db).map_err(from_error)?)
        } else {
            None
        };
        let interference = if interferers == 0 {
            InterferenceSpec::none()
        } else {
            InterferenceSpec::random(interferers, inr_db)
        };
        let est = simulation::estimate_pd(
            &det.spec,
            &clutter,
            target.as_ref(),
            &interference,
            runs,
            seed,
            workers,
        )
        .map_err(from_error)?;
        write(
            out,
            CfarPdEstimate {
                p_hat: est.p_hat,
                standard_error: est.standard_error,
                runs: est.runs,
                successes: est.successes,
            },
        )
    })
}

/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cfar_ca_threshold(pfa: f64, n: usize, out: *mut f64) -> CfarStatus {
    guard(|| write(out, analytic::ca_threshold(pfa, n).map_err(from_error)?))
}

/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cfar_ca_pd(tau: f64, scr: f64, n: usize, out: *mut f64) -> CfarStatus {
    guard(|| {
        if !(tau >= 0.0 && scr >= 0.0 && n >= 1) {
            return Err(fail(
                CfarStatus::Domain,
                "ca_pd needs tau >= 0, scr >= 0, n >= 1",
            ));
        }
        write(out, analytic::ca_pd(tau, scr, n))
    })
}

/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cfar_ca_pfa(tau: f64, n: usize, out: *mut f64) -> CfarStatus {
    unsafe { cfar_ca_pd(tau, 0.0, n, out) }
}

/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cfar_os_threshold(
    pfa: f64,
    n: usize,
    k: usize,
    out: *mut f64,
) -> CfarStatus {
    guard(|| {
        let tau =
            analytic::os_threshold(pfa, n, k, &SolverSettings::default()).map_err(from_error)?;
        write(out, tau)
    })
}

/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cfar_os_pd(
    tau: f64,
    scr: f64,
    n: usize,
    k: usize,
    out: *mut f64,
) -> CfarStatus {
    guard(|| {
        if !(tau >= 0.0 && scr >= 0.0) {
            return Err(fail(
                CfarStatus::Domain,
                "os_pd needs tau >= 0 and scr >= 0",
            ));
        }
        write(out, analytic::os_pd(tau, scr, n, k).map_err(from_error)?)
    })
}

/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cfar_os_pfa(tau: f64, n: usize, k: usize, out: *mut f64) -> CfarStatus {
    unsafe { cfar_os_pd(tau, 0.0, n, k, out) }
}

/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cfar_ideal_threshold(pfa: f64, rate: f64, out: *mut f64) -> CfarStatus {
    guard(|| {
        write(
            out,
            analytic::ideal_threshold(pfa, rate).map_err(from_error)?,
        )
    })
}

/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cfar_ideal_pd(pfa: f64, scr: f64, out: *mut f64) -> CfarStatus {
    guard(|| write(out, analytic::ideal_pd(pfa, scr).map_err(from_error)?))
}

/// Copies `cfar_last_error_message` into `buf` (truncated, always
/// NUL-terminated) and returns the full message length, or 0 when there is
/// no error.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn cfar_copy_last_error(buf: *mut c_char, len: usize) -> usize {
    let msg = cfar_last_error_message();
    if msg.is_null() {
        return 0;
    }
    // SAFETY: a non-null message is a live CString owned by this thread.
    let bytes = unsafe { CStr::from_ptr(msg) }.to_bytes();
    if !buf.is_null() && len > 0 {
        let n = bytes.len().min(len - 1);
        // SAFETY: `buf` holds `len > n` bytes per the contract.
        unsafe {
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
    }
    bytes.len()
}
