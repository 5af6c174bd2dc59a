use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name).display().to_string()
}

fn cise(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cise")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

#[test]
fn conflicts_exit_one() {
    let o = cise(&["analyze", &fixture("generic.cise"), "--bounds", "0..2"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stdout(&o).contains("f / g: commutativity conflict"), "{}", stdout(&o));
}

#[test]
fn no_operations_exit_zero() {
    let o = cise(&["analyze", &fixture("empty-ops.cise")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn json_report_shape() {
    let o = cise(&["analyze", &fixture("school.cise"), "--bounds", "0..2", "--report", "json"]);
    assert_eq!(o.status.code(), Some(1));
    let r = json(&o);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["bounds"], serde_json::json!([0, 2]));
    assert_eq!(r["state_fields"], serde_json::json!(["students", "courses", "enrolled"]));
    assert_eq!(r["pairs"].as_array().unwrap().len(), 6);
    assert_eq!(r["self"].as_array().unwrap().len(), 4);
    assert_eq!(r["safety"].as_array().unwrap().len(), 4);
    assert!(r["token_system"].is_null());
    let pair = r["pairs"].as_array().unwrap().iter().find(|p| p["ops"] == serde_json::json!(["addCourse", "remCourse"])).unwrap();
    assert_eq!(pair["verdict"], "commutativity-conflict");
    let cex = &pair["failures"][0]["counterexample"];
    assert_eq!(cex["trace"].as_array().unwrap().len(), 4);
}

#[test]
fn reports_are_deterministic() {
    let args = ["analyze", &fixture("school.cise"), "--bounds", "0..2", "--report", "json"];
    assert_eq!(cise(&args).stdout, cise(&args).stdout);
}

#[test]
fn token_report() {
    let o = cise(&["analyze", &fixture("school.cise"), "--bounds", "0..2", "--tokens", &fixture("coarse.tok"), "--report", "json"]);
    let r = json(&o);
    assert_eq!(r["token_system"]["skipped"].as_array().unwrap().len(), 2);
    let pair = r["pairs"].as_array().unwrap().iter().find(|p| p["ops"] == serde_json::json!(["enroll", "remCourse"])).unwrap();
    assert_eq!(pair["verdict"], "skipped-by-token-system");
}

#[test]
fn input_errors_exit_two() {
    let o = cise(&["analyze", "/nonexistent.cise"]);
    assert_eq!(o.status.code(), Some(2));
    let o = cise(&["analyze", &fixture("school.cise"), "--bounds", "3..0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("empty interval"));
    let o = cise(&["analyze", &fixture("school.cise"), "--tokens", &fixture("typo.tok")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("typo.tok:1:10"), "{}", stderr(&o));
    assert!(stderr(&o).contains("unknown operation `enrol`"));
}

#[test]
fn strongest_postcondition() {
    let o = cise(&["sp", &fixture("school_sp.cise"), "addCourse"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "exists v0. state.courses = add(course, v0) && course > 0");

    let o = cise(&["sp", &fixture("school.cise"), "addCourse"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--force"));
    let o = cise(&["sp", &fixture("school.cise"), "addCourse", "--force"]);
    assert_eq!(stdout(&o).trim(), "exists v0. state.courses = add(course, v0) && course > 0");

    let o = cise(&["sp", &fixture("school.cise"), "dropCourse"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulator_scenarios() {
    let o = cise(&["crdt-sim", &fixture("scenarios/reordered.sim")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = json(&o);
    assert_eq!(r["converged"], true);
    assert_eq!(r["scenario"]["finals"].as_array().unwrap().len(), 3);

    let o = cise(&["crdt-sim", &fixture("scenarios/undelivered.sim")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("never reaches replica 1"));
}

#[test]
fn simulator_random_runs() {
    let o = cise(&["crdt-sim", "--seed", "7", "--runs", "25", "--max-events", "40"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&o);
    assert_eq!(r["converged"], true);
    assert_eq!(r["diverged_seeds"], serde_json::json!([]));
}

#[test]
fn emitted_scripts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("smt");
    let o = cise(&["emit-smt", &fixture("generic.cise"), out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut names: Vec<String> =
        std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    assert!(names.contains(&"f_g_commutativity__0.smt2".to_string()), "{names:?}");
    assert!(stdout(&o).starts_with(&format!("wrote {} scripts", names.len())));
}

#[test]
fn solver_cross_check() {
    let Some(solver) = cise::smt::configured_solver() else {
        eprintln!("no SMT solver configured; skipping");
        return;
    };
    let o = cise(&["analyze", &fixture("generic.cise"), "--bounds", "0..2", "--solver", &solver, "--report", "json"]);
    assert_eq!(json(&o)["warnings"], serde_json::json!([]));
}
