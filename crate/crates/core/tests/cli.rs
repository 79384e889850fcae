use std::path::Path;
use std::process::{Command, Output};

fn twinsense(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twinsense"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Column `name` of a CSV whose headers read `name [unit]`.
fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header
        .iter()
        .position(|h| h.split(" [").next() == Some(name))
        .unwrap_or_else(|| panic!("no column {name} in {header:?}"));
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

#[test]
fn budget_defaults() {
    let o = twinsense(&["budget"]);
    assert!(o.status.success());
    let csv = stdout(&o);
    assert!(rel(column(&csv, "shot_noise")[0], 3.9e-15) < 0.02);
    assert!(rel(column(&csv, "back_action")[0], 33e-18) < 0.03);
}

#[test]
fn budget_without_squeezing_sits_on_sql() {
    let csv = stdout(&twinsense(&["budget", "--squeezing-db", "0"]));
    assert!(rel(column(&csv, "squeezed_floor")[0], column(&csv, "sql")[0]) < 1e-12);
}

#[test]
fn back_action_meets_shot_noise_near_fifteen_milliwatts() {
    let csv = stdout(&twinsense(&["budget", "--power", "15 mW", "--squeezing-db", "0"]));
    assert!(rel(column(&csv, "back_action")[0], column(&csv, "shot_noise")[0]) < 0.05);
}

#[test]
fn budget_json_has_fields() {
    let o = twinsense(&["budget", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["shot_noise"].as_f64().unwrap() > 0.0);
}

#[test]
fn single_point_sweep_equals_budget() {
    let budget = stdout(&twinsense(&["budget", "--power", "2 mW"]));
    let sweep = stdout(&twinsense(&["sweep", "--axis", "power", "--from", "2 mW", "--to", "2 mW", "--points", "1"]));
    let header = |s: &str| s.lines().next().unwrap().to_string();
    assert_eq!(header(&budget), header(&sweep));
    assert_eq!(budget.lines().nth(1), sweep.lines().nth(1));
}

#[test]
fn gain_sweep_follows_ideal_noise() {
    let csv = stdout(&twinsense(&["sweep", "--axis", "gain", "--from", "1", "--to", "10", "--points", "19"]));
    for (g, n) in column(&csv, "gain").into_iter().zip(column(&csv, "ideal_noise")) {
        assert!(rel(n, 1.0 / (2.0 * g - 1.0)) < 1e-9);
    }
}

#[test]
fn invalid_inputs_exit_two() {
    let o = twinsense(&["sweep", "--axis", "power", "--from", "5 mW", "--to", "1 mW"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(twinsense(&["reproduce", "fig9"]).status.code(), Some(2));
    assert_eq!(twinsense(&["budget", "--power", "5 parsecs"]).status.code(), Some(2));
    assert_eq!(twinsense(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn unknown_config_key_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "seed = 3\n\n[measurement]\nbogus_key = 1\n").unwrap();
    let o = twinsense(&["--config", path.to_str().unwrap(), "budget"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bogus_key") && err.contains("line 4"), "{err}");
}

#[test]
fn missing_config_is_io_error() {
    let o = twinsense(&["--config", "/nonexistent/run.toml", "budget"]);
    assert_eq!(o.status.code(), Some(3));
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn reproduce_is_deterministic_per_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = twinsense(&["--seed", "7", "--output", dir.path().to_str().unwrap(), "reproduce", "fig4"]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert!(fa.iter().any(|(n, _)| n == "fig4_anchors.json"));
    assert!(fa.iter().any(|(n, _)| n == "fig4a.csv"));
    assert_eq!(fa, fb);
}

#[test]
fn reproduce_writes_plot_scripts() {
    let dir = tempfile::tempdir().unwrap();
    let o = twinsense(&["--plot-scripts", "--output", dir.path().to_str().unwrap(), "reproduce", "fig3a"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("fig3a"));
    let names: Vec<String> = files(dir.path()).into_iter().map(|(n, _)| n).collect();
    assert!(names.contains(&"fig3a.csv".to_string()));
    assert!(names.contains(&"fig3a.gp".to_string()), "{names:?}");
}

#[test]
fn psd_prints_a_trace() {
    let o = twinsense(&["psd", "--drive", "100 mV"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = stdout(&o);
    assert!(csv.lines().count() > 100);
}

#[test]
fn in_process_entry_point_matches_binary() {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = twinsense::cli::run(["twinsense", "budget"], &mut out, &mut err);
    assert_eq!(code, 0);
    assert_eq!(String::from_utf8(out).unwrap(), stdout(&twinsense(&["budget"])));
}
