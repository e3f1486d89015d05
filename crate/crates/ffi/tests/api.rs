use std::ffi::CStr;
use std::ptr;

use cfar_ffi::*;

fn last_error() -> String {
    let p = cfar_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn new_for_pfa(stat: CfarStat, k: usize, pfa: f64) -> *mut CfarDetector {
    let mut det = ptr::null_mut();
    let s = unsafe { cfar_detector_new_for_pfa(stat as i32, k, 32, 8, pfa, &mut det) };
    assert_eq!(s, CfarStatus::Ok);
    assert!(!det.is_null());
    det
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(cfar_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn analytic_wrappers_match_oracles() {
    let mut tau = 0.0;
    assert_eq!(
        unsafe { cfar_ca_threshold(1e-4, 32, &mut tau) },
        CfarStatus::Ok
    );
    assert!(((tau - 0.333_521_432_163_324) / tau).abs() < 1e-12);
    let mut pd = 0.0;
    assert_eq!(
        unsafe { cfar_ca_pd(tau, 10.0, 32, &mut pd) },
        CfarStatus::Ok
    );
    assert!((pd - 0.384_494_452_118_415_8).abs() < 1e-12);
    let mut pfa = 0.0;
    assert_eq!(unsafe { cfar_ca_pfa(tau, 32, &mut pfa) }, CfarStatus::Ok);
    assert!((pfa / 1e-4 - 1.0).abs() < 1e-12);

    assert_eq!(unsafe { cfar_os_pfa(1.0, 4, 4, &mut pfa) }, CfarStatus::Ok);
    assert!((pfa - 0.2).abs() < 1e-12);
    assert_eq!(
        unsafe { cfar_os_threshold(1e-4, 32, 31, &mut tau) },
        CfarStatus::Ok
    );
    assert!((tau - 3.913_640_399_178_425).abs() < 1e-9);
    assert_eq!(
        unsafe { cfar_os_pd(1.0, 1.0, 4, 4, &mut pd) },
        CfarStatus::Ok
    );
    assert!((pd - 128.0 / 315.0).abs() < 1e-12);

    assert_eq!(
        unsafe { cfar_ideal_threshold(1e-4, 1.0, &mut tau) },
        CfarStatus::Ok
    );
    assert!((tau - 9.210_340_371_976_183).abs() < 1e-12);
    assert_eq!(
        unsafe { cfar_ideal_pd(1e-4, 10.0, &mut pd) },
        CfarStatus::Ok
    );
    assert!((pd - 0.432_876_128_108_305_8).abs() < 1e-12);
}

#[test]
fn errors_carry_codes_and_messages() {
    let mut x = 0.0;
    assert_eq!(
        unsafe { cfar_ca_threshold(0.0, 32, &mut x) },
        CfarStatus::Domain
    );
    assert!(last_error().contains("Pfa"));
    assert_eq!(
        unsafe { cfar_os_threshold(1e-4, 32, 40, &mut x) },
        CfarStatus::Domain
    );
    assert_eq!(
        unsafe { cfar_ca_threshold(1e-4, 32, ptr::null_mut()) },
        CfarStatus::NullPointer
    );
    assert_eq!(
        unsafe { cfar_ca_pd(-1.0, 0.0, 32, &mut x) },
        CfarStatus::Domain
    );

    let mut buf = [0 as std::ffi::c_char; 8];
    let full = unsafe { cfar_copy_last_error(buf.as_mut_ptr(), buf.len()) };
    assert!(full > 7);
    assert_eq!(buf[7], 0);

    // Success clears the slot.
    assert_eq!(
        unsafe { cfar_ca_threshold(1e-4, 32, &mut x) },
        CfarStatus::Ok
    );
    assert!(cfar_last_error_message().is_null());
    assert_eq!(unsafe { cfar_copy_last_error(ptr::null_mut(), 0) }, 0);
}

#[test]
fn detector_lifecycle_and_validation() {
    let mut det = ptr::null_mut();
    for (stat, k, n, guard) in [
        (0, 0, 31, 8),
        (0, 0, 32, 7),
        (1, 33, 32, 8),
        (1, 0, 32, 8),
        (9, 0, 32, 8),
    ] {
        let s = unsafe { cfar_detector_new(stat, k, n, guard, 1.0, &mut det) };
        assert_eq!(
            s,
            CfarStatus::Domain,
            "stat {stat} k {k} n {n} guard {guard}"
        );
    }
    let s = unsafe {
        cfar_detector_new_for_pfa(CfarStat::GeometricMean as i32, 0, 32, 8, 1e-4, &mut det)
    };
    assert_eq!(s, CfarStatus::Domain);
    assert!(last_error().contains("geometric"));

    let det = new_for_pfa(CfarStat::OrderStatistic, 31, 1e-4);
    let mut tau = 0.0;
    assert_eq!(
        unsafe { cfar_detector_threshold(det, &mut tau) },
        CfarStatus::Ok
    );
    assert!((tau - 3.913_640_399_178_425).abs() < 1e-9);
    unsafe { cfar_detector_free(det) };
    unsafe { cfar_detector_free(ptr::null_mut()) };
    assert_eq!(
        unsafe { cfar_detector_threshold(ptr::null(), &mut tau) },
        CfarStatus::NullPointer
    );
}

#[test]
fn slide_marks_untested_edges_and_finds_a_spike() {
    let det = new_for_pfa(CfarStat::OrderStatistic, 31, 1e-4);
    let mut profile = vec![1.0; 101];
    profile[50] = 100.0;
    let mut out = vec![9i8; 101];
    let s = unsafe { cfar_detector_slide(det, profile.as_ptr(), 101, out.as_mut_ptr(), 101) };
    assert_eq!(s, CfarStatus::Ok);
    let reach = 16 + 4;
    assert!(out[..reach].iter().all(|&d| d == -1));
    assert!(out[101 - reach..].iter().all(|&d| d == -1));
    assert_eq!(out[50], 1);
    assert_eq!(out.iter().filter(|&&d| d == 1).count(), 1);

    let s = unsafe { cfar_detector_slide(det, profile.as_ptr(), 101, out.as_mut_ptr(), 100) };
    assert_eq!(s, CfarStatus::BufferSize);
    let s = unsafe { cfar_detector_slide(det, profile.as_ptr(), 10, out.as_mut_ptr(), 10) };
    assert_eq!(s, CfarStatus::Domain);
    let s = unsafe { cfar_detector_slide(det, ptr::null(), 101, out.as_mut_ptr(), 101) };
    assert_eq!(s, CfarStatus::NullPointer);
    unsafe { cfar_detector_free(det) };
}

#[test]
fn estimate_pd_through_the_abi() {
    let det = new_for_pfa(CfarStat::Sum, 0, 1e-2);
    let mut est = CfarPdEstimate::default();
    let s = unsafe { cfar_estimate_pd(det, 2.0, 0, 0.0, 0, 0.0, 100_000, 3, 2, &mut est) };
    assert_eq!(s, CfarStatus::Ok);
    assert_eq!(est.runs, 100_000);
    assert!((est.p_hat - 1e-2).abs() < 4.0 * (1e-2 * 0.99 / 1e5f64).sqrt());

    let mut again = CfarPdEstimate::default();
    unsafe { cfar_estimate_pd(det, 2.0, 0, 0.0, 0, 0.0, 100_000, 3, 1, &mut again) };
    assert_eq!(est, again);

    let mut masked = CfarPdEstimate::default();
    let s = unsafe { cfar_estimate_pd(det, 1.0, 1, 15.0, 1, 30.0, 20_000, 3, 1, &mut masked) };
    assert_eq!(s, CfarStatus::Ok);
    let mut clean = CfarPdEstimate::default();
    unsafe { cfar_estimate_pd(det, 1.0, 1, 15.0, 0, 0.0, 20_000, 3, 1, &mut clean) };
    assert!(masked.p_hat < clean.p_hat);

    let s = unsafe { cfar_estimate_pd(det, 0.0, 0, 0.0, 0, 0.0, 10, 3, 1, &mut est) };
    assert_eq!(s, CfarStatus::Domain);
    let s = unsafe { cfar_estimate_pd(det, 1.0, 0, 0.0, 40, 10.0, 10, 3, 1, &mut est) };
    assert_eq!(s, CfarStatus::Domain);
    let s = unsafe { cfar_estimate_pd(det, 1.0, 0, 0.0, 0, 0.0, 10, 3, 0, &mut est) };
    assert_eq!(s, CfarStatus::Domain);
    unsafe { cfar_detector_free(det) };
}
