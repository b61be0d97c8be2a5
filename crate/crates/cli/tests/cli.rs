use std::path::Path;
use std::process::{Command, Output};

fn arrowlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arrowlab")).args(args).env_remove("ARROWLAB_GUARD_OVERRIDE").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn orders_text_and_json() {
    let o = arrowlab(&["orders", "-m", "3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 13);
    assert!(text.starts_with("0\ta>b>c\t"));
    let j: serde_json::Value = serde_json::from_slice(&arrowlab(&["orders", "-m", "2", "--json"]).stdout).unwrap();
    assert_eq!(j.as_array().unwrap().len(), 3);
}

#[test]
fn profile_listing_and_counts() {
    assert_eq!(stdout(&arrowlab(&["profiles", "-n", "2", "-m", "3"])).lines().count(), 169);
    assert_eq!(stdout(&arrowlab(&["profiles", "-n", "2", "-m", "1", "--count"])).trim(), "1");
    assert_eq!(stdout(&arrowlab(&["profiles", "-n", "3", "-m", "3", "--count"])).trim(), "2197");
}

#[test]
fn guard_and_usage_exit_codes() {
    assert_eq!(arrowlab(&["stats", "-n", "4", "-m", "3"]).status.code(), Some(65));
    assert_eq!(arrowlab(&["stats", "-n", "1", "-m", "3"]).status.code(), Some(65));
    assert_eq!(arrowlab(&["prove", "--frobnicate"]).status.code(), Some(64));
    assert_eq!(arrowlab(&["--help"]).status.code(), Some(0));
    let lifted = Command::new(env!("CARGO_BIN_EXE_arrowlab"))
        .args(["profiles", "-n", "4", "-m", "3", "--count"])
        .env("ARROWLAB_GUARD_OVERRIDE", "1")
        .output()
        .unwrap();
    assert!(lifted.status.success());
    assert_eq!(stdout(&lifted).trim(), "28561");
}

#[test]
fn prove_then_check() {
    let dir = tempfile::tempdir().unwrap();
    let trace = path(dir.path(), "p.apf");
    let o = arrowlab(&["prove", "-n", "2", "-m", "3", "-o", &trace]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("4 top-level cases closed"));
    let c = arrowlab(&["check", &trace, "--stats"]);
    assert_eq!(c.status.code(), Some(0));
    assert!(stdout(&c).contains("SPU"));

    let text = std::fs::read_to_string(&trace).unwrap();
    let broken = text.replacen("|SPU|1\n", "|SPT|1\n", 1);
    std::fs::write(&trace, broken).unwrap();
    let c = arrowlab(&["check", &trace]);
    assert_eq!(c.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&c.stderr).contains("line 3"));
}

#[test]
fn seeded_prove_gives_a_valid_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = path(dir.path(), "s.apf");
    assert!(arrowlab(&["prove", "--seed", "42", "-o", &trace]).status.success());
    assert_eq!(arrowlab(&["check", &trace]).status.code(), Some(0));
}

#[test]
fn check_json_and_missing_file() {
    let dir = tempfile::tempdir().unwrap();
    let trace = path(dir.path(), "j.apf");
    arrowlab(&["prove", "-o", &trace]);
    let j: serde_json::Value = serde_json::from_slice(&arrowlab(&["check", &trace, "--json"]).stdout).unwrap();
    assert_eq!(j["status"]["valid"], true);
    assert_eq!(arrowlab(&["check", &path(dir.path(), "nope.apf")]).status.code(), Some(1));
}

#[test]
fn cnf_round_trip_through_solver() {
    let dir = tempfile::tempdir().unwrap();
    let cnf = path(dir.path(), "a.cnf");
    let map = path(dir.path(), "vars.json");
    assert!(arrowlab(&["cnf", "-o", &cnf, "--map", &map]).status.success());
    let vars: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&map).unwrap()).unwrap();
    assert_eq!(vars.as_object().unwrap().len(), 1014);
    assert_eq!(vars["R[1](s,b,c)"], 10);
    assert_eq!(arrowlab(&["solve", &cnf]).status.code(), Some(20));

    let open = path(dir.path(), "b.cnf");
    assert!(arrowlab(&["cnf", "-o", &open, "--no-non-dictatorship"]).status.success());
    assert_eq!(arrowlab(&["solve", &open]).status.code(), Some(10));
    let e = arrowlab(&["solve", &open, "--enumerate", "--limit", "5"]);
    assert_eq!(e.status.code(), Some(10));
    assert!(stdout(&e).contains("5 models (limit reached)"));

    std::fs::write(&open, "p cnf 2 1\n1 5 0\n").unwrap();
    let bad = arrowlab(&["solve", &open]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 2"));
}

#[test]
fn models_and_stats() {
    let o = arrowlab(&["models", "--limit", "2", "--json"]);
    let j: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(j["count"], 2);
    assert_eq!(j["complete"], false);
    assert_eq!(j["models"][0]["cells"]["1"].as_object().unwrap().len(), 6);
    let s: serde_json::Value = serde_json::from_slice(&arrowlab(&["stats"]).stdout).unwrap();
    assert_eq!(s["cells"], 1014);
    assert_eq!(s["transitivity_clauses"], 1014);
    assert_eq!(s["non_dictatorship_clauses"], 2);
}
