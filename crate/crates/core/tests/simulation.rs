use cfar_core::analytic::{ca_pd, ca_threshold, os_pd, os_threshold, SolverSettings};
use cfar_core::detector::{DetectorSpec, StatKind};
use cfar_core::simulation::{
    estimate_pd, Engine, ExperimentSpec, InterferenceSpec, Placement, RegulationSpec,
};
use cfar_core::stats::{db_to_linear, ClutterModel, TargetContext};

fn ca(pfa: f64) -> DetectorSpec {
    DetectorSpec::new(StatKind::Sum, 32, 8, ca_threshold(pfa, 32).unwrap()).unwrap()
}

fn os(pfa: f64, k: usize) -> DetectorSpec {
    let tau = os_threshold(pfa, 32, k, &SolverSettings::default()).unwrap();
    DetectorSpec::new(StatKind::OrderStatistic(k), 32, 8, tau).unwrap()
}

#[test]
fn monte_carlo_matches_closed_forms() {
    let engine = Engine::new(2).unwrap();
    let clutter = ClutterModel::default();
    let target = TargetContext::from_db(10.0).unwrap();
    let none = InterferenceSpec::none();

    let spec = ca(1e-4);
    let est = engine
        .estimate_pd(&spec, &clutter, Some(&target), &none, 300_000, 21)
        .unwrap();
    let exact = ca_pd(spec.threshold_multiplier(), 10.0, 32);
    assert!(est.agrees_with(exact, 4.0), "CA {est:?} vs {exact}");

    let spec = os(1e-4, 31);
    let est = engine
        .estimate_pd(&spec, &clutter, Some(&target), &none, 300_000, 22)
        .unwrap();
    let exact = os_pd(spec.threshold_multiplier(), 10.0, 32, 31).unwrap();
    assert!(est.agrees_with(exact, 4.0), "OS {est:?} vs {exact}");
}

#[test]
fn sweep_tracks_analytic_curves() {
    let engine = Engine::new(3).unwrap();
    let exp = ExperimentSpec {
        detectors: vec![ca(1e-3), os(1e-3, 24)],
        clutter: ClutterModel::new(4.0).unwrap(),
        scr_grid_db: vec![0.0, 5.0, 10.0, 15.0, 20.0],
        interference: None,
        runs: 100_000,
        seed: 7,
    };
    let curves = engine.scr_sweep(&exp).unwrap();
    assert_eq!(curves.len(), 2);
    for p in &curves[0].points {
        let exact = ca_pd(
            exp.detectors[0].threshold_multiplier(),
            db_to_linear(p.abscissa),
            32,
        );
        assert!(
            p.estimate.agrees_with(exact, 4.5),
            "CA at {} dB",
            p.abscissa
        );
    }
    for p in &curves[1].points {
        let exact = os_pd(
            exp.detectors[1].threshold_multiplier(),
            db_to_linear(p.abscissa),
            32,
            24,
        )
        .unwrap();
        assert!(
            p.estimate.agrees_with(exact, 4.5),
            "OS at {} dB",
            p.abscissa
        );
    }
}

#[test]
fn duplicate_detectors_get_independent_equal_curves() {
    let engine = Engine::new(2).unwrap();
    let spec = ca(1e-2);
    let exp = ExperimentSpec {
        detectors: vec![spec, spec],
        clutter: ClutterModel::default(),
        scr_grid_db: vec![0.0, 6.0, 12.0],
        interference: None,
        runs: 50_000,
        seed: 8,
    };
    let curves = engine.scr_sweep(&exp).unwrap();
    let mut identical = true;
    for (a, b) in curves[0].points.iter().zip(&curves[1].points) {
        let (ea, eb) = (a.estimate, b.estimate);
        identical &= ea.successes == eb.successes;
        let joint = (ea.standard_error.powi(2) + eb.standard_error.powi(2)).sqrt();
        assert!((ea.p_hat - eb.p_hat).abs() <= 4.0 * joint);
    }
    assert!(
        !identical,
        "duplicate detectors must not share random streams"
    );
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let clutter = ClutterModel::default();
    let target = TargetContext::from_db(3.0).unwrap();
    let inter = InterferenceSpec::random(2, 15.0);
    let spec = os(1e-2, 24);
    let counts: Vec<u64> = [1, 2, 5]
        .into_iter()
        .map(|w| {
            estimate_pd(&spec, &clutter, Some(&target), &inter, 20_001, 99, w)
                .unwrap()
                .successes
        })
        .collect();
    assert!(counts.windows(2).all(|c| c[0] == c[1]), "{counts:?}");
}

#[test]
fn mc_calibration_recovers_closed_form_thresholds() {
    let engine = Engine::new(2).unwrap();
    for (stat, exact) in [
        (StatKind::Sum, ca_threshold(1e-2, 32).unwrap()),
        (
            StatKind::OrderStatistic(31),
            os_threshold(1e-2, 32, 31, &SolverSettings::default()).unwrap(),
        ),
    ] {
        let tau = engine
            .calibrate_threshold_mc(stat, 32, 1e-2, 1_000_000, 5)
            .unwrap();
        assert!(
            ((tau - exact) / exact).abs() < 0.02,
            "{stat}: {tau} vs {exact}"
        );
    }
    assert!(engine
        .calibrate_threshold_mc(StatKind::Sum, 32, 1e-2, 9_999, 5)
        .is_err());
    assert_eq!(
        engine
            .calibrate_threshold_mc(StatKind::Sum, 32, 1.0, 1, 5)
            .unwrap(),
        0.0
    );
}

#[test]
fn geometric_mean_calibration_holds_design_pfa() {
    let engine = Engine::new(2).unwrap();
    let tau = engine
        .calibrate_threshold_mc(StatKind::GeometricMean, 32, 1e-2, 1_000_000, 6)
        .unwrap();
    let spec = DetectorSpec::new(StatKind::GeometricMean, 32, 8, tau).unwrap();
    let est = engine
        .estimate_pd(
            &spec,
            &ClutterModel::new(0.3).unwrap(),
            None,
            &InterferenceSpec::none(),
            200_000,
            61,
        )
        .unwrap();
    // Calibration noise (about 1% relative) plus estimation noise.
    assert!((est.p_hat - 1e-2).abs() < 6e-4, "{est:?}");
}

#[test]
fn regulation_edges_hold_design_pfa() {
    let engine = Engine::new(2).unwrap();
    let clutter = ClutterModel::default();
    let spec = ca(1e-2);
    let reg = RegulationSpec {
        boost_db: 10.0,
        runs: 200_000,
        design_pfa: 1e-2,
        affected_counts: vec![0, 8, 17, 32],
    };
    let curve = engine
        .pfa_regulation_curve(&spec, &clutter, &reg, 3)
        .unwrap();
    let p: Vec<_> = curve.points.iter().map(|p| p.estimate).collect();
    assert!(p[0].agrees_with(1e-2, 4.0), "j = 0: {:?}", p[0]);
    assert!(p[1].p_hat < 1e-2, "j = 8: {:?}", p[1]);
    assert!(p[2].p_hat > 1e-2, "j = 17: {:?}", p[2]);
    assert!(p[3].agrees_with(1e-2, 4.0), "j = 32: {:?}", p[3]);

    let flat = RegulationSpec {
        boost_db: 0.0,
        affected_counts: vec![0, 5, 16, 17, 31, 32],
        ..reg.clone()
    };
    for pt in engine
        .pfa_regulation_curve(&spec, &clutter, &flat, 4)
        .unwrap()
        .points
    {
        assert!(pt.estimate.agrees_with(1e-2, 4.0), "j = {}", pt.abscissa);
    }

    let bad = RegulationSpec {
        affected_counts: vec![33],
        ..reg
    };
    assert!(engine
        .pfa_regulation_curve(&spec, &clutter, &bad, 1)
        .is_err());
}

#[test]
fn interference_masks_the_target() {
    let engine = Engine::new(2).unwrap();
    let clutter = ClutterModel::default();
    let target = TargetContext::from_db(15.0).unwrap();
    let spec = ca(1e-4);
    let clean = engine
        .estimate_pd(
            &spec,
            &clutter,
            Some(&target),
            &InterferenceSpec::none(),
            50_000,
            1,
        )
        .unwrap();
    let masked = engine
        .estimate_pd(
            &spec,
            &clutter,
            Some(&target),
            &InterferenceSpec::random(1, 30.0),
            50_000,
            1,
        )
        .unwrap();
    assert!(masked.p_hat + 10.0 * masked.standard_error < clean.p_hat);
}

#[test]
fn interference_is_validated() {
    let engine = Engine::new(1).unwrap();
    let clutter = ClutterModel::default();
    let spec = ca(1e-4);
    let run = |i: InterferenceSpec| engine.estimate_pd(&spec, &clutter, None, &i, 10, 1);
    assert!(run(InterferenceSpec::random(33, 10.0)).is_err());
    let fixed = |cells: Vec<usize>| InterferenceSpec {
        count: cells.len(),
        inr_db: 10.0,
        placement: Placement::Fixed(cells),
    };
    assert!(run(fixed(vec![0])).is_err());
    assert!(run(fixed(vec![33])).is_err());
    assert!(run(fixed(vec![3, 3])).is_err());
    assert!(run(fixed(vec![1, 32])).is_ok());
}
