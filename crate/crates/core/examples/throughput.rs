//! Rough Monte Carlo throughput check: `cargo run --release --example throughput`.

use std::time::Instant;

use cfar_core::analytic::{ca_threshold, os_threshold, SolverSettings};
use cfar_core::detector::{DetectorSpec, StatKind};
use cfar_core::simulation::{Engine, InterferenceSpec};
use cfar_core::stats::ClutterModel;

fn main() {
    let runs = 2_000_000;
    let engine = Engine::new(1).unwrap();
    let clutter = ClutterModel::default();
    let ca = DetectorSpec::new(StatKind::Sum, 32, 8, ca_threshold(1e-4, 32).unwrap()).unwrap();
    let tau_os = os_threshold(1e-4, 32, 31, &SolverSettings::default()).unwrap();
    let os = DetectorSpec::new(StatKind::OrderStatistic(31), 32, 8, tau_os).unwrap();
    for spec in [ca, os] {
        let start = Instant::now();
        let est = engine
            .estimate_pd(&spec, &clutter, None, &InterferenceSpec::none(), runs, 1)
            .unwrap();
        let secs = start.elapsed().as_secs_f64();
        println!(
            "{:>5}: p_hat = {:.3e} ± {:.1e}, {:.1} ns/trial",
            spec.stat().label(),
            est.p_hat,
            est.standard_error,
            secs * 1e9 / runs as f64
        );
    }
}
