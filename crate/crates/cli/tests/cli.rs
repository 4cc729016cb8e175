use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn krnorm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_krnorm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, body: &str) -> String {
    let p: PathBuf = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json report")
}

const UNIT_DIPOLE: &str =
    r#"{"version": 1, "atoms": [{"point": [0, 0], "mass": 1}, {"point": [1, 0], "mass": -1}]}"#;

const PATH: &str = r#"{
  "version": 1,
  "domain": {"lower": [-0.25, -0.25], "upper": [1.25, 0.25]},
  "atoms": [{"point": [0, 0], "mass": 1}, {"point": [1, 0], "mass": -1}]
}"#;

#[test]
fn connect_unit_dipole() {
    let dir = TempDir::new().unwrap();
    let doc = write(&dir, "d.json", UNIT_DIPOLE);
    let out = krnorm(&["connect", &doc]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["result"]["value"], 1.0);
    assert_eq!(r["command"], "connect");
    assert_eq!(r["input_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn dual_and_flatnorm() {
    let dir = TempDir::new().unwrap();
    let doc = write(&dir, "d.json", UNIT_DIPOLE);
    let out = krnorm(&["dual", &doc]);
    assert_eq!(out.status.code(), Some(0));
    assert!((report(&out)["result"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let out = krnorm(&["flatnorm", &doc, "--convention", "sum"]);
    assert_eq!(out.status.code(), Some(0));
    assert!((report(&out)["result"]["value"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-9);
}

#[test]
fn beckmann_on_the_path() {
    let dir = TempDir::new().unwrap();
    let doc = write(&dir, "p.json", PATH);
    let out = krnorm(&["beckmann", &doc, "--grid", "3x1"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = report(&out);
    assert_eq!(r["result"]["cost"], 1.0);
    assert_eq!(
        r["result"]["anisotropy_bound"].as_f64().unwrap(),
        2f64.sqrt()
    );
}

#[test]
fn plan_check_accepts_exact_and_rejects_perturbed_plans() {
    let dir = TempDir::new().unwrap();
    let exact = r#"{"version": 1,
        "atoms": [{"point": [1, 0], "mass": 1}, {"point": [0, 0], "mass": -1}],
        "plan": [{"base": [0, 0], "dir": [1, 0], "t": 1, "mass": 1}]}"#;
    let out = krnorm(&["plan-check", &write(&dir, "ok.json", exact)]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );

    let perturbed = exact.replace(r#""base": [0, 0]"#, r#""base": [0.01, 0]"#);
    let out = krnorm(&["plan-check", &write(&dir, "bad.json", &perturbed)]);
    assert_eq!(out.status.code(), Some(4));
    let r = report(&out);
    assert!(r["result"]["max_residual"].as_f64().unwrap() > 1e-3);
    assert!(r["verification_failure"].is_string());
}

#[test]
fn malformed_and_unknown_inputs_exit_2() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", "{\"version\": 1,\n \"atoms\": [}");
    let out = krnorm(&["connect", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2 column"));

    let doc = write(&dir, "d.json", UNIT_DIPOLE);
    assert_eq!(
        krnorm(&["connect", &doc, "--frobnicate"]).status.code(),
        Some(2)
    );

    let unbalanced = write(
        &dir,
        "u.json",
        r#"{"version": 1, "atoms": [{"point": [0, 0], "mass": 1}]}"#,
    );
    assert_eq!(krnorm(&["connect", &unbalanced]).status.code(), Some(2));
}

#[test]
fn density_formats_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let doc = write(&dir, "p.json", PATH);
    let a = krnorm(&["density", &doc, "--grid", "6x2"]);
    let b = krnorm(&["density", &doc, "--grid", "6x2", "--parallel"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let csv = String::from_utf8(a.stdout).unwrap();
    assert_eq!(csv.lines().count(), 12);
    assert!(csv.starts_with("0,0,"));
    let svg = krnorm(&["density", &doc, "--grid", "6x2", "--format", "svg"]);
    assert!(String::from_utf8_lossy(&svg.stdout).starts_with("<svg"));
    assert_eq!(krnorm(&["density", &doc]).status.code(), Some(2));
}

#[test]
fn decompose_reports_certified_split() {
    let dir = TempDir::new().unwrap();
    let doc = write(
        &dir,
        "n.json",
        r#"{"version": 1,
            "segments": [{"a": [0, 0], "b": [1, 0], "density": [1, 0]}],
            "vector_atoms": [{"point": [5, 0], "vector": [0, 2]}]}"#,
    );
    let out = krnorm(&["decompose", &doc]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["result"]["normal_mass"], 2.0);
    assert_eq!(r["result"]["certified"], true);
    assert!((r["result"]["witness_value"].as_f64().unwrap() - 3.0).abs() < 1e-12);
}

#[test]
fn modulus_table_and_floor() {
    let dir = TempDir::new().unwrap();
    let doc = write(
        &dir,
        "m.json",
        r#"{"version": 1,
            "dipoles": {"pairs": [[[0, 1], [0.5, 1]], [[0, 2], [0.25, 2]]], "tail": {"ratio": 0.5, "first_term": 1}},
            "options": {"epsilons": [0.75, 0.25]}}"#,
    );
    let out = krnorm(&["modulus", &doc, "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "epsilon,c_epsilon,k,tail\n0.75,2.0,1,0.5\n0.25,4.0,2,0.25\n"
    );
    assert_eq!(
        krnorm(&["modulus", &doc, "--eps", "0.1"]).status.code(),
        Some(3)
    );
}

#[test]
fn selftest_suites() {
    let out = krnorm(&["selftest"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    assert_eq!(report(&out)["suites"].as_array().unwrap().len(), 3);

    assert_eq!(
        krnorm(&["selftest", "--inject-fault"]).status.code(),
        Some(4)
    );

    let only = krnorm(&["selftest", "--filter", "duality"]);
    let suites = report(&only)["suites"].clone();
    assert_eq!(suites.as_array().unwrap().len(), 1);
    assert_eq!(suites[0]["name"], "duality");

    assert_eq!(
        krnorm(&["selftest", "--filter", "nothing"]).status.code(),
        Some(2)
    );
}

#[test]
fn out_flag_writes_file() {
    let dir = TempDir::new().unwrap();
    let doc = write(&dir, "d.json", UNIT_DIPOLE);
    let target = dir.path().join("r.json");
    let out = krnorm(&["connect", &doc, "--out", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_slice(&std::fs::read(target).unwrap()).unwrap();
    assert_eq!(v["result"]["value"], 1.0);
}
