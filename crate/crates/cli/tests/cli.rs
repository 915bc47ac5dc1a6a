use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BASE: &str = r#"
[problem]
gamma = 0.5
r = 4.0
lambda = 1e-3

[problem.operator]
kind = "double_phase"
p = 1.5
q = 2.0
mu = 1.0

[mesh]
dim = 2
n = 8

[solver]
seed = 11

[scan]
n_directions = 6

[check]
n_functions = 20
n_scaling = 20
n_gradient = 4
n_directions = 10
"#;

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("run.toml");
    fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_nehari"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn solve_writes_report_with_opposite_energies() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), BASE, &["solve"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("hypothesis audit"));
    let report = read_json(&dir.path().join("out/report.json"));
    assert_eq!(report["success"], Value::Bool(true));
    let e_plus = report["diagnostics"]["d1_estimate"].as_f64().unwrap();
    assert!(e_plus > 0.0);
    let u_minus = fs::read_to_string(dir.path().join("out/u_minus.csv")).unwrap();
    assert!(u_minus.starts_with("x,y,u\n"));
    assert_eq!(u_minus.lines().count(), 1 + 81);
    let j = |b: &str| report[b]["point"]["energy"].as_f64().unwrap();
    assert!(j("plus") < 0.0 && j("minus") > 0.0);
}

#[test]
fn solve_is_deterministic_and_honours_seed() {
    let dir = tempfile::tempdir().unwrap();
    let read = |args: &[&str]| {
        let o = run(dir.path(), BASE, args);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        fs::read(dir.path().join("out/report.json")).unwrap()
    };
    let a = read(&["solve"]);
    let b = read(&["solve"]);
    assert_eq!(a, b);
    let c = read(&["solve", "--seed", "5"]);
    let v: Value = serde_json::from_slice(&c).unwrap();
    assert_eq!(v["seed"], Value::from(5));
}

#[test]
fn failing_growth_condition_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &BASE.replace("r = 4.0", "r = 2.0"), &["solve"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("H_C"), "{}", stderr(&o));
    assert!(!dir.path().join("out/report.json").exists());
}

#[test]
fn override_runs_past_the_audit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = BASE.replace("r = 4.0", "r = 2.0").replace("lambda = 1e-3", "lambda = 1e-3\nlambdas = [1e-3]");
    let o = run(dir.path(), &cfg, &["scan", "--override-hypotheses"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn malformed_config_exits_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &BASE.replace("gamma = 0.5", "gamma = "), &["solve"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
    let o = run(dir.path(), &BASE.replace("[scan]", "[scan]\nwidth = 3"), &["solve"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("width"), "{}", stderr(&o));
    let o = run(dir.path(), &BASE.replace("p = 1.5", "p = 0.5"), &["solve"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn non_monotone_custom_nfunction_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = BASE.replace(
        "kind = \"double_phase\"\np = 1.5\nq = 2.0\nmu = 1.0",
        "kind = \"custom\"\nh = \"s * s * (1.5 + math::sin(10.0 * s))\"\ndh = \"2.0 * s * (1.5 + math::sin(10.0 * s)) + 10.0 * s * s * math::cos(10.0 * s)\"\nd2h = \"2.0\"",
    );
    let o = run(dir.path(), &cfg, &["check"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn empty_lambda_grid_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = BASE.replace("lambda = 1e-3", "lambdas = []");
    let o = run(dir.path(), &cfg, &["scan"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("empty"));
}

#[test]
fn scan_table_trends_and_degenerates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = BASE.replace("lambda = 1e-3", "lambdas = [1e-5, 1e-4, 1e-3, 1e-2, 1e-1]");
    let o = run(dir.path(), &cfg, &["scan"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("lambda_empirical = 1.0000000000000001e-1"));
    let csv = fs::read_to_string(dir.path().join("out/scan.csv")).unwrap();
    assert!(csv.starts_with("lambda,direction_id,n_roots,t_plus,t_minus,D1,D2,sigma\n"));
    assert_eq!(csv.lines().count(), 1 + 5 * 6);
    let scan = read_json(&dir.path().join("out/scan.json"));
    let d1: Vec<f64> = scan["diagnostics"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d["d1_estimate"].as_f64().unwrap())
        .collect();
    assert!(d1.windows(2).all(|w| w[0] < w[1]), "{d1:?}");

    let o = run(dir.path(), BASE, &["scan"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("out/scan.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 6);
}

#[test]
fn check_writes_one_object_per_property() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), BASE, &["check"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = read_json(&dir.path().join("out/properties.json"));
    let items = v.as_array().unwrap();
    assert_eq!(items.len(), 9);
    for it in items {
        assert!(it["name"].is_string() && it["samples"].is_u64() && it["max_violation"].is_number(), "{it}");
        assert_eq!(it["passed"], Value::Bool(true), "{it}");
    }
}

#[test]
fn fibering_profile_has_two_roots() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), BASE, &["fibering", "--direction", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("(plus)") && out.contains("(minus)"), "{out}");
    let csv = fs::read_to_string(dir.path().join("out/fibering.csv")).unwrap();
    assert!(csv.starts_with("t,psi,dpsi,d2psi\n"));
}

#[test]
fn one_dimensional_mesh_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("line.mesh"), "1 5 4\n0\n0.25\n0.5\n0.75\n1\n0 1\n1 2\n2 3\n3 4\n").unwrap();
    let cfg = BASE.replace("dim = 2\nn = 8", "file = \"line.mesh\"");
    let o = run(dir.path(), &cfg, &["fibering"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}
