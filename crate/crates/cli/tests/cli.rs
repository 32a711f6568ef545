use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spinrestrict"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_owned).collect();
    let rows = lines
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn quantity(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key},")))
        .unwrap_or_else(|| panic!("no {key} in\n{text}"))
        .to_owned()
}

fn write_system(dir: &Path, n: usize, law: &str, rate: f64) -> String {
    let spins: Vec<Value> = (0..n)
        .map(|i| serde_json::json!({"label": format!("H{i}"), "multiplicity": 2, "offset_hz": 15.0 * i as f64 - 20.0}))
        .collect();
    let mut couplings = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            couplings.push(serde_json::json!({"i": i, "j": j, "j_hz": 2.0 + (i + 2 * j) as f64 % 6.0}));
        }
    }
    let eq = if rate > 0.0 { "unit_z" } else { "none" };
    let doc = serde_json::json!({
        "spins": spins,
        "couplings": couplings,
        "relaxation": {"law": law, "base_rate_hz": rate, "equilibrium_drive_hz": 0.0, "equilibrium": eq},
    });
    let path = dir.join(format!("sys{n}.json"));
    std::fs::write(&path, doc.to_string()).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn advise_linear_table() {
    let o = run(&["advise", "--h", "5", "--r", "1", "--xi", "0.01", "--law", "linear"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(quantity(&text, "k_int"), "9");
    let k: f64 = quantity(&text, "k_real").parse().unwrap();
    assert!((k - 8.45).abs() < 0.01);
    let horizon: f64 = quantity(&text, "short_time_horizon").parse().unwrap();
    assert!((horizon - 0.8).abs() < 1e-12);
}

#[test]
fn advise_constant_and_json() {
    let o = run(&["--format", "json", "advise", "--h", "5", "--r", "1", "--xi", "0.01", "--law", "constant"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["k_int"], 48);
    let k = v["k_real"].as_f64().unwrap();
    assert!((k - (10.0 * 100f64.ln() + 1.0)).abs() < 1e-9);
    assert_eq!(v["intermediates"]["law"], "constant");
}

#[test]
fn advise_rejects_bad_tolerance() {
    let o = run(&["advise", "--h", "5", "--r", "1", "--xi", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--xi"), "{}", stderr(&o));
}

#[test]
fn json_errors_on_stderr() {
    let o = run(&["--json-errors", "advise", "--h=-1", "--r", "1", "--xi", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
    let v: Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    assert_eq!(v["flag"], "--h");
    assert_eq!(v["exit_code"], 2);
}

#[test]
fn unknown_law_is_usage_error() {
    let o = run(&["normflow", "--h", "1", "--r", "1", "--r0", "0", "--levels", "2", "--law", "cubic", "--t-total", "1", "--dt", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn normflow_rotation_conserves_norm() {
    let o = run(&["normflow", "--h", "2", "--r", "0", "--r0", "0", "--levels", "2", "--t-total", "3", "--dt", "0.1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header, ["t", "level_1", "level_2"]);
    assert_eq!(rows.len(), 31);
    for row in rows {
        assert!((row[1] * row[1] + row[2] * row[2] - 1.0).abs() < 1e-7);
    }
}

#[test]
fn normflow_settles_to_fixed_point() {
    let (h, r, r0) = (1.0, 1.0, 0.5);
    let o = run(&["normflow", "--h", "1", "--r", "1", "--r0", "0.5", "--levels", "2", "--law", "constant", "--t-total", "60", "--dt", "1"]);
    let (_, rows) = csv_rows(&stdout(&o));
    let last = rows.last().unwrap();
    // A y + b = 0 for the two-level chain
    let det = r * r + h * h;
    let (y1, y2) = (r * r0 / det, h * r0 / det);
    assert!((last[1] - y1).abs() < 1e-6 && (last[2] - y2).abs() < 1e-6, "{last:?}");
}

#[test]
fn stationary_profile_starts_at_r0_over_2h() {
    let o = run(&["profile", "--h", "5", "--r", "1", "--r0", "2", "--stationary", "--x-max", "10", "--nx", "11"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header, ["x", "rho"]);
    let first = rows.iter().find(|r| r[0] >= 1.0).unwrap();
    assert!((first[1] - 0.2).abs() < 1e-12);
    assert!(rows.iter().filter(|r| r[0] < 1.0).all(|r| r[1] == 0.0));
}

#[test]
fn transient_profile_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.csv");
    let o = run(&["profile", "--h", "5", "--r", "1", "--r0", "1", "--t", "0.1", "--output", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let side: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("p.csv.delta.json")).unwrap()).unwrap();
    assert!((side["delta_position"].as_f64().unwrap() - 2.0).abs() < 1e-12);

    let late = dir.path().join("late.json");
    let o = run(&["profile", "--h", "5", "--r", "1", "--r0", "1", "--t", "50", "--sidecar", late.to_str().unwrap()]);
    assert!(o.status.success());
    let side: Value = serde_json::from_str(&std::fs::read_to_string(late).unwrap()).unwrap();
    assert!(side["delta_weight"].as_f64().unwrap() < 1e-12);
}

#[test]
fn simulate_starts_without_two_spin_order() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write_system(dir.path(), 2, "none", 0.0);
    let o = run(&["simulate", "--system", &sys, "--k", "2", "--t-total", "0.1", "--dt", "0.01"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header, ["t", "order_0", "order_1", "order_2", "total"]);
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[0][3], 0.0);
    assert!(rows[10][3] > 0.0);
}

#[test]
fn full_compare_at_full_order_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write_system(dir.path(), 5, "linear", 1.0);
    let report = dir.path().join("r.json");
    let o = run(&[
        "simulate", "--system", &sys, "--k", "5", "--t-total", "0.05", "--dt", "0.01", "--full-compare",
        "--report", report.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert!(v["max_obs_error"].as_f64().unwrap() < 1e-10);
    assert_eq!(v["k"], 5);
}

#[test]
fn full_compare_needs_a_destination() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write_system(dir.path(), 2, "none", 0.0);
    let o = run(&["simulate", "--system", &sys, "--k", "2", "--t-total", "0.1", "--dt", "0.01", "--full-compare"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_runtime_failures() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write_system(dir.path(), 2, "none", 0.0);
    let o = run(&["simulate", "--system", &sys, "--k", "3", "--t-total", "0.1", "--dt", "0.01"]);
    assert_eq!(o.status.code(), Some(1));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"spins": [], "extra": 1}"#).unwrap();
    let o = run(&["simulate", "--system", bad.to_str().unwrap(), "--k", "1", "--t-total", "0.1", "--dt", "0.01"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["simulate", "--system", "/nonexistent.json", "--k", "1", "--t-total", "0.1", "--dt", "0.01"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn liouvillian_export_and_thread_override() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write_system(dir.path(), 2, "linear", 1.0);
    let lv = dir.path().join("l.txt");
    let o = bin()
        .env("SPINRESTRICT_THREADS", "2")
        .args(["simulate", "--system", &sys, "--k", "2", "--t-total", "0.02", "--dt", "0.01", "--export-liouvillian", lv.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!std::fs::read_to_string(lv).unwrap().is_empty());
}

#[test]
fn output_is_deterministic() {
    let args = ["normflow", "--h", "3", "--r", "0.5", "--r0", "1", "--levels", "6", "--law", "sqrt", "--t-total", "2", "--dt", "0.25"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn help_exits_cleanly() {
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("Hz"));
}
