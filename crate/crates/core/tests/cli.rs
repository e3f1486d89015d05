use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cfar_core::analytic::{ca_pd, ca_threshold, ideal_pd, os_pd, os_threshold, SolverSettings};
use cfar_core::experiment::RunConfig;
use cfar_core::stats::db_to_linear;

fn cfar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfar"))
        .args(args)
        .output()
        .expect("cfar binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// A shipped config with its run count scaled down.
fn shrunk_config(dir: &Path, name: &str, runs: u64) -> PathBuf {
    let text = std::fs::read_to_string(configs_dir().join(name)).unwrap();
    let mut out: Vec<String> = text
        .lines()
        .filter(|l| !l.starts_with("runs"))
        .map(str::to_string)
        .collect();
    out.push(format!("runs = {runs}"));
    let path = dir.join(name);
    std::fs::write(&path, out.join("\n")).unwrap();
    path
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn threshold_examples() {
    let o = cfar(&[
        "threshold",
        "--stat",
        "ca",
        "--window",
        "32",
        "--pfa",
        "1e-4",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "0.333521432");

    let o = cfar(&[
        "threshold",
        "--stat",
        "os",
        "--window",
        "32",
        "--k",
        "31",
        "--pfa",
        "1",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "0.000000000");

    let o = cfar(&[
        "threshold",
        "--stat",
        "os",
        "--window",
        "32",
        "--k",
        "31",
        "--pfa",
        "1e-4",
    ]);
    assert_eq!(stdout(&o).trim(), "3.91364040");

    let o = cfar(&["threshold", "--stat", "ideal", "--pfa", "1e-4"]);
    assert_eq!(stdout(&o).trim(), "9.21034037");

    let o = cfar(&[
        "threshold",
        "--stat",
        "min",
        "--window",
        "32",
        "--pfa",
        "1e-4",
    ]);
    assert_eq!(stdout(&o).trim(), "319968.000");
}

#[test]
fn threshold_rejects_bad_arguments() {
    for args in [
        &[
            "threshold",
            "--stat",
            "os",
            "--window",
            "32",
            "--k",
            "40",
            "--pfa",
            "1e-4",
        ][..],
        &[
            "threshold",
            "--stat",
            "os",
            "--window",
            "32",
            "--pfa",
            "1e-4",
        ][..],
        &["threshold", "--stat", "ca", "--window", "32", "--pfa", "0"][..],
        &[
            "threshold",
            "--stat",
            "ca",
            "--window",
            "32",
            "--pfa",
            "1.5",
        ][..],
        &[
            "threshold",
            "--stat",
            "ca",
            "--window",
            "31",
            "--pfa",
            "1e-4",
        ][..],
        &["threshold", "--stat", "bogus", "--pfa", "1e-4"][..],
    ] {
        let o = cfar(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(!o.stderr.is_empty(), "{args:?}");
        assert!(o.stdout.is_empty(), "{args:?}");
    }
}

#[test]
fn solver_failure_has_its_own_exit_code() {
    // N = 4096, k = 4000 with a tiny Pfa drives the log-gamma path past the
    // precision the default tolerance asks for.
    let o = cfar(&[
        "threshold",
        "--stat",
        "os",
        "--window",
        "4096",
        "--k",
        "4000",
        "--pfa",
        "1e-300",
    ]);
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn shipped_configs_parse() {
    let mut seen = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert_eq!(seen, 4);
}

#[test]
fn os_index_config_matches_closed_forms() {
    let cfg = configs_dir().join("os_index_sweep.toml");
    let o = cfar(&["pd-curve", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>(),
        ["detector", "stat", "k", "scr_db", "pd_hat", "se", "ci_lo", "ci_hi", "runs", "source"]
    );
    let ca_tau = ca_threshold(1e-4, 32).unwrap();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        rows += 1;
        assert_eq!(&rec[9], "analytic");
        let scr = db_to_linear(rec[3].parse().unwrap());
        let pd: f64 = rec[4].parse().unwrap();
        let exact = match &rec[1] {
            "ca" => ca_pd(ca_tau, scr, 32),
            "os" => {
                let k: usize = rec[2].parse().unwrap();
                let tau = os_threshold(1e-4, 32, k, &SolverSettings::default()).unwrap();
                os_pd(tau, scr, 32, k).unwrap()
            }
            other => panic!("unexpected stat {other}"),
        };
        assert_eq!(pd, exact);
    }
    assert_eq!(rows, 5 * 31);
}

#[test]
fn interference_config_emits_five_curves_and_bound() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = shrunk_config(dir.path(), "ca_interference.toml", 2_000);
    let o = cfar(&["pd-curve", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    let mut labels: Vec<String> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let (pd, se, lo, hi): (f64, f64, f64, f64) = (
            rec[4].parse().unwrap(),
            rec[5].parse().unwrap(),
            rec[6].parse().unwrap(),
            rec[7].parse().unwrap(),
        );
        assert!((0.0..=1.0).contains(&pd) && se >= 0.0 && lo <= pd && pd <= hi);
        if &rec[0] == "ideal" {
            let scr = db_to_linear(rec[3].parse().unwrap());
            assert_eq!(pd, ideal_pd(1e-4, scr).unwrap());
        }
        if !labels.contains(&rec[0].to_string()) {
            labels.push(rec[0].to_string());
        }
    }
    let montecarlo = ["ca", "ca_inr1db", "ca_inr10db", "ca_inr20db", "ca_inr30db"];
    for l in montecarlo.iter().chain(&["ideal"]) {
        assert!(labels.iter().any(|x| x == l), "missing {l} in {labels:?}");
    }
}

#[test]
fn csv_is_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = shrunk_config(dir.path(), "os_interference.toml", 3_000);
    let run = |w: &str| {
        let o = cfar(&[
            "pd-curve",
            "--config",
            cfg.to_str().unwrap(),
            "--workers",
            w,
        ]);
        assert!(o.status.success());
        o.stdout
    };
    let one = run("1");
    assert_eq!(one, run("3"));
    assert_eq!(one, run("8"));

    let other_seed = cfar(&[
        "pd-curve",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "77",
    ]);
    assert_ne!(one, other_seed.stdout);
}

#[test]
fn regulation_writes_files_in_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = shrunk_config(dir.path(), "clutter_edge.toml", 500);
    let csv_path = dir.path().join("reg.csv");
    let o = cfar(&[
        "regulation",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "detector,affected_cells,pfa_hat,se,design_pfa,boost_db,runs"
    );
    assert_eq!(lines.count(), 2 * 33);

    let o = cfar(&[
        "regulation",
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "json",
    ]);
    let rows: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 66);
    assert_eq!(rows[0]["detector"], "ca");
    assert_eq!(rows[65]["detector"], "os31");
    assert_eq!(rows[65]["affected_cells"], 32);
}

#[test]
fn bad_configs_are_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    for body in [
        "scr_db = []",
        "windw = 32",
        "window = 33",
        "design_pfa = 0.0",
        "workers = 0",
        "format = \"xml\"",
        "detectors = [\"os:40\"]",
        "detectors = [\"cfar\"]",
        "affected_cells = [40]",
        "interference_inr_db = [10.0]\ninterference_cells = [0]",
    ] {
        let cfg = write_config(dir.path(), body);
        let o = cfar(&["pd-curve", "--config", cfg.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(1), "{body}");
        assert!(!o.stderr.is_empty());
    }
    let o = cfar(&["pd-curve", "--config", "/nonexistent/run.toml"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unresolvable_threshold_names_the_detector() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "detectors = [\"ca\", \"gm\"]\ncalibration_runs = 10",
    );
    let o = cfar(&["pd-curve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("'gm'"));
}

#[test]
fn verify_filter_runs_matching_properties() {
    let o = cfar(&["verify", "--filter", "scale-invariance"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("PASS  scale-invariance"));
    assert!(out.contains("decision-scale-invariance"));
    assert!(!out.contains("round-trip"));

    let o = cfar(&["verify", "--filter", "no-such-property"]);
    assert_eq!(o.status.code(), Some(1));
}
