//! The `spre` binary: subcommands, files and exit codes.

use std::path::Path;
use std::process::{Command, Output};

use spre::metrics::compute_metrics;
use spre::run::simulate;
use spre::scenario::builtin;
use spre::timeseries::load_timeseries;

fn spre(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spre")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write_short_scenario(dir: &Path, duration: f64) -> String {
    let path = dir.join("short.toml");
    std::fs::write(
        &path,
        format!("name = \"short\"\nbase = \"step-shear\"\n[simulation]\nduration = {duration}\n[wind]\nstep_interval = 50.0\n"),
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("res");
    let o = spre(&["run", "--scenario", "ideal", "--out", out.to_str().unwrap(), "--dump-xi", "--dump-field"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["timeseries.csv", "revolutions.csv", "metrics.csv", "azimuth_map.csv", "xi.csv", "field.csv"] {
        let text = std::fs::read_to_string(out.join(f)).unwrap();
        assert!(text.starts_with("# spre "), "{f}");
        assert!(!text.contains("NaN") && !text.contains("inf"), "{f}");
    }
    let xi = std::fs::read_to_string(out.join("xi.csv")).unwrap();
    assert_eq!(xi.lines().count(), 1 + 3);
    assert_eq!(xi.lines().nth(1).unwrap().split(',').count(), 72);
}

#[test]
fn metrics_subcommand_reproduces_the_run_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("res");
    let scenario = write_short_scenario(dir.path(), 400.0);
    assert_eq!(code(&spre(&["run", "--scenario", &scenario, "--out", out.to_str().unwrap()])), 0);
    let series = out.join("timeseries.csv");
    let o = spre(&["metrics", "--in", series.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), std::fs::read_to_string(out.join("metrics.csv")).unwrap());
}

#[test]
fn same_seed_gives_byte_identical_series_and_other_seeds_differ() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_short_scenario(dir.path(), 120.0);
    let read = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let o = spre(&["run", "--scenario", &scenario, "--out", out.to_str().unwrap(), "--seed", seed]);
        assert_eq!(code(&o), 0);
        std::fs::read(out.join("timeseries.csv")).unwrap()
    };
    let a = read("a", "42");
    assert_eq!(a, read("b", "42"));
    assert_ne!(a, read("c", "43"));
}

#[test]
fn table_file_round_trip_through_run() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("cone.csv");
    assert_eq!(code(&spre(&["build-table", "--out", table.to_str().unwrap()])), 0);
    let scenario = write_short_scenario(dir.path(), 60.0);
    let with = dir.path().join("with");
    let without = dir.path().join("without");
    let args = |out: &Path| vec!["run".to_string(), "--scenario".into(), scenario.clone(), "--out".into(), out.to_str().unwrap().into()];
    let mut a = args(&with);
    a.extend(["--table".into(), table.to_str().unwrap().into()]);
    assert_eq!(code(&spre(&a.iter().map(String::as_str).collect::<Vec<_>>())), 0);
    let b = args(&without);
    assert_eq!(code(&spre(&b.iter().map(String::as_str).collect::<Vec<_>>())), 0);
    // the default table is the one build-table writes
    assert_eq!(
        std::fs::read(with.join("timeseries.csv")).unwrap(),
        std::fs::read(without.join("timeseries.csv")).unwrap()
    );
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let o = spre(&["run", "--scenario", "no-such-scenario", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let msg = String::from_utf8_lossy(&o.stderr);
    for name in ["step-shear", "wake-overlap", "ideal"] {
        assert!(msg.contains(name), "{msg}");
    }

    let missing = dir.path().join("missing.csv");
    assert_eq!(code(&spre(&["metrics", "--in", missing.to_str().unwrap()])), 1);

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[simulation]\nhorizon_est = 9\n").unwrap();
    let o = spre(&["run", "--scenario", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("horizon_est must not exceed horizon_pred"));

    assert_eq!(code(&spre(&["run", "--out", out.to_str().unwrap()])), 1);
    assert_eq!(code(&spre(&["run", "--scenario", "ideal", "--out", "x", "--table", missing.to_str().unwrap()])), 1);
}

#[test]
fn runtime_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let scenario = write_short_scenario(dir.path(), 10.0);
    let o = spre(&["run", "--scenario", &scenario, "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(code(&o), 2);

    let junk = dir.path().join("junk.csv");
    std::fs::write(&junk, "# spre timeseries v0\n").unwrap();
    assert_eq!(code(&spre(&["metrics", "--in", junk.to_str().unwrap()])), 2);
}

#[test]
fn named_scenarios_emit_only_finite_values() {
    for name in ["step-shear", "wake-overlap"] {
        let out = simulate(&builtin(name).unwrap(), None).unwrap();
        assert!(out.rows.iter().all(|r| r.is_finite()), "{name}");
        assert!(out.revolutions.iter().all(|r| r.ybar_norm.is_finite() && r.rews.is_finite()), "{name}");
        assert_eq!(out.frozen_revolutions, 0, "{name}");
        compute_metrics(&out.rows).unwrap();
    }
}

#[test]
fn help_exits_with_zero() {
    assert_eq!(code(&spre(&["--help"])), 0);
    assert_eq!(code(&spre(&["run", "--help"])), 0);
}

#[test]
fn loads_written_series() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    let scenario = write_short_scenario(dir.path(), 30.0);
    assert_eq!(code(&spre(&["run", "--scenario", &scenario, "--out", out.to_str().unwrap()])), 0);
    let rows = load_timeseries(&out.join("timeseries.csv")).unwrap();
    assert!(rows.windows(2).all(|w| w[1].t > w[0].t));
    assert!(rows.iter().all(|r| r.station < 60));
}
