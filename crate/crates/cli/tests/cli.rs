use std::process::Command;

use preserver_cli::{run, EXIT_NEGATIVE, EXIT_OK, EXIT_PARSE, EXIT_USAGE};
use serde_json::Value;

fn cli(args: &[&str]) -> preserver_cli::Outcome {
    run(std::iter::once("preserver").chain(args.iter().copied()))
}

fn json(args: &[&str]) -> Value {
    let mut full = vec!["--format", "json"];
    full.extend_from_slice(args);
    serde_json::from_str(&cli(&full).stdout).unwrap()
}

#[test]
fn expand_prints_taylor_coefficients() {
    let out = cli(&["expand", "endo(x0 + 1)", "--degree", "3"]);
    assert_eq!(out.code, EXIT_OK);
    assert_eq!(out.stdout, "q(0) = 1\nq(1) = 1\nq(2) = 1/2\nq(3) = 1/6\n");
}

#[test]
fn check_reports_a_counterexample_as_json() {
    let v = json(&["check", "diff(1)", "--domain", "[0,1]"]);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["exit_code"], EXIT_NEGATIVE);
    assert_eq!(v["seed"], 20240101);
    assert_eq!(v["result"]["verdict"], "falsified");
    assert_eq!(v["result"]["value"], "-1");
}

#[test]
fn exit_codes() {
    assert_eq!(cli(&["moments", "lebesgue([0,1"]).code, EXIT_PARSE);
    assert_eq!(cli(&["bogus"]).code, EXIT_USAGE);
    assert_eq!(cli(&["momentcheck", "1,1,1,1,1", "--domain", "[2,inf)"]).code, EXIT_NEGATIVE);
    assert_eq!(cli(&["momentcheck", "1,1,1,1,1"]).code, EXIT_OK);
    assert_eq!(cli(&["--format", "csv", "expand", "id"]).code, EXIT_USAGE);
}

#[test]
fn momentcheck_shows_the_failing_matrix() {
    let out = cli(&["momentcheck", "1,1,1,1,1", "--domain", "[2,inf)", "--order", "2"]);
    assert!(out.stdout.starts_with("refuted at order 0 by localizer x0 - 2"));
    assert!(out.stdout.contains("level 0 localizer x0 - 2:\n[[-1]]"));
}

#[test]
fn adjoint_of_a_scaling() {
    let out = cli(&["adjoint", "endo(x0/2)", "--at", "1"]);
    assert_eq!(out.code, EXIT_OK);
    assert!(out.stdout.starts_with("T(μ) = push(1/2*x0; dirac(1))\n"));
    assert!(out.stdout.contains("m(3) = 1/8\n"));
}

#[test]
fn classify_finite_rank() {
    let out = cli(&["classify", "rank{(x0 + 2; lebesgue([-1,1])), (x0^2; neg(lebesgue([0,1])))}", "--domain", "[-1,1]"]);
    assert_eq!(out.code, EXIT_OK);
    assert!(out.stdout.starts_with("positivity preserver"));
}

#[test]
fn repro_matches_every_golden() {
    let v = json(&["repro"]);
    assert_eq!(v["failed"], 0);
    assert_eq!(v["checks"].as_array().unwrap().len(), 14);
}

#[test]
fn approx_writes_csv_and_json() {
    let dir = std::env::temp_dir().join(format!("preserver-approx-{}", std::process::id()));
    let out = cli(&[
        "approx", "mul(x0 + 2)", "--domain", "[-1,1]", "--schedule", "2,4", "--poly", "x0", "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let csv = std::fs::read_to_string(dir.join("convergence.csv")).unwrap();
    assert_eq!(
        csv,
        "r,D,N,poly-id,measured_error,bound,bound_claimed,pass\n2,1,8,x0,3/2,7,false,true\n4,1/2,16,x0,3/4,7/2,false,true\n"
    );
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("convergence.json")).unwrap()).unwrap();
    assert_eq!(v["schema"], 1);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn binary_exit_status() {
    let bin = env!("CARGO_BIN_EXE_preserver");
    let ok = Command::new(bin).args(["moments", "dirac(2)", "--degree", "2"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(EXIT_OK));
    assert_eq!(String::from_utf8(ok.stdout).unwrap(), "m(0) = 1\nm(1) = 2\nm(2) = 4\n");
    let bad = Command::new(bin).args(["moments", "dirac("]).output().unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_PARSE));
    assert!(String::from_utf8(bad.stderr).unwrap().starts_with("error: parse error"));
}
