use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_paulisym")).args(args).env_remove("PAULISYM_SEED").output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn tmp(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

#[test]
fn incompatible_row_fails_unless_expected() {
    let out = run(&["residual", "--table", "2", "--row", "5", "--variant", "qrse-h3"]);
    assert_eq!(code(&out), 1);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("residual (expected failure)"), "{text}");
    let out = run(&["residual", "--table", "2", "--row", "5", "--variant", "qrse-h3", "--expected"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn residual_of_a_single_generator() {
    let out = run(&["residual", "--table", "2", "--row", "5", "--variant", "qrse-h3", "--generator", "J3", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["report"]["generators"].as_array().unwrap().len(), 1);
    assert_eq!(v["report"]["generators"][0]["report"]["symmetry"], true);
}

#[test]
fn log_potential_integrals_are_green() {
    let out = run(&["superintegrable", "--nu", "1", "--vecpot", "zero", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let checks = v["report"]["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 5);
    assert!(checks.iter().all(|c| c["symmetry"] == true));
    assert_eq!(v["report"]["algebra"]["closes"], true);
}

#[test]
fn printed_vector_potential_loses_qhat_even_when_expected() {
    let out = run(&["superintegrable", "--vecpot", "printed", "--expected", "--format", "json"]);
    assert_eq!(code(&out), 1);
    let v = json(&out);
    let qhat = v["report"]["checks"].as_array().unwrap().iter().find(|c| c["name"] == "Qhat").unwrap().clone();
    assert_eq!(qhat["symmetry"], false);
    assert_eq!(qhat["expected"], true);
    assert_eq!(code(&run(&["superintegrable", "--vecpot", "radial", "--expected"])), 0);
}

#[test]
fn usage_errors_exit_64() {
    for args in [
        vec!["verify-entry", "--table", "5", "--row", "1"],
        vec!["verify-entry", "--table", "2", "--row", "9"],
        vec!["verify-entry", "--table", "1", "--row", "1", "--variant", "dirac"],
        vec!["--trials", "4", "list"],
        vec!["--tol", "-1", "list"],
        vec!["residual", "--table", "1", "--row", "2", "--generator", "P9"],
        vec!["closure", "J1", "J2", "--odd", "Qhat"],
        vec!["closure", "J1", "nonsense("],
        vec!["gauge", "--table", "1", "--row", "1", "--phi", "x1 +"],
        vec!["superintegrable", "--phi", "0,1"],
        vec!["frobnicate"],
    ] {
        let out = run(&args);
        assert_eq!(code(&out), 64, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(out.stdout.is_empty(), "{args:?}");
    }
}

#[test]
fn help_is_not_an_error() {
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn verify_all_is_deterministic() {
    let args = ["verify-all", "--variant", "qrse-h3a", "--table", "1", "--seed", "7", "--trials", "16", "--format", "json"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["seed"], 7);
    assert_eq!(v["report"]["rows"], 14);
}

#[test]
fn seed_comes_from_the_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_paulisym"))
        .args(["verify-entry", "--table", "1", "--row", "1", "--format", "json"])
        .env("PAULISYM_SEED", "99")
        .output()
        .unwrap();
    assert_eq!(json(&out)["seed"], 99);
}

#[test]
fn sp_catalog_is_as_expected() {
    let out = run(&["verify-all", "--variant", "sp", "--seed", "7", "--format", "json", "--expected"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["report"]["rows"], 52);
    assert_eq!(v["report"]["matches_expected"], 52);
}

#[test]
fn list_covers_the_catalog() {
    let out = run(&["list", "--format", "json"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["entries"].as_array().unwrap().len(), 52);
}

#[test]
fn closure_of_angular_momentum() {
    let out = run(&["closure", "J1", "J2", "J3", "--format", "json"]);
    assert_eq!(code(&out), 0);
    assert_eq!(code(&run(&["closure", "J1", "J2", "L3"])), 1);
}

#[test]
fn gauge_from_a_config_file() {
    let path = tmp("gauge.json");
    std::fs::write(&path, r#"{"opaque":{"F":3,"G":3,"R":1},"F":"F(x1,x2,x3)","G":"G(x1,x2,x3)","A0":"R(r)","momentum":"canonical"}"#).unwrap();
    let p = path.to_str().unwrap();
    let base = ["gauge", "--config", p, "--phi", "x1*x3", "--variant", "qrse-h3", "--format", "json"];
    let out = run(&base);
    assert_eq!(code(&out), 1);
    let v = json(&out);
    assert_eq!(v["report"]["covariant"], false);
    assert_eq!(v["report"]["with_pauli_shift"], true);
    let mut exp = base.to_vec();
    exp.push("--expected");
    assert_eq!(code(&run(&exp)), 0);
    assert_eq!(code(&run(&["gauge", "--config", p, "--phi", "x1*x3", "--variant", "qrse-h3a"])), 0);
}

#[test]
fn short_evolution_writes_csv() {
    let path = tmp("traj.csv");
    let out = run(&["evolve", "--scenario", "log", "--n", "24", "--steps", "20", "--csv", path.to_str().unwrap()]);
    assert!(matches!(code(&out), 0 | 1));
    let csv = std::fs::read_to_string(&path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,norm,Qhat_re,Qhat_im");
    assert_eq!(lines.count(), 5);
}
