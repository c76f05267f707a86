//! Command-line behaviour: exit codes, formats and output files.

use agtrees::cli::{main_with_args, EXIT_FAIL, EXIT_OK, EXIT_USAGE};

fn run(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("agtrees").chain(args.iter().copied()))
}

fn tmp(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("agtrees-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(&["frobnicate"]), EXIT_USAGE);
    assert_eq!(run(&["grow"]), EXIT_USAGE, "missing --n");
    assert_eq!(run(&["grow", "--n", "4", "--format", "yaml"]), EXIT_USAGE);
    assert_eq!(run(&["grow", "--n", "4", "--alpha", "1/3", "--gamma", "1/2"]), EXIT_USAGE, "gamma > alpha");
    assert_eq!(run(&["grow", "--n", "4", "--alpha", "x/2"]), EXIT_USAGE);
    assert_eq!(run(&["project", "--k", "2"]), EXIT_USAGE, "no tree");
    assert_eq!(run(&["project", "--k", "2", "--tree", "((1,2)"]), EXIT_USAGE);
    assert_eq!(run(&["--help"]), EXIT_OK);
}

#[test]
fn grow_writes_json_with_the_requested_number_of_trees() {
    let out = tmp("grow.json");
    let code = run(&["grow", "--n", "6", "--samples", "5", "--alpha", "0.7", "--gamma", "0.4", "--seed", "3", "--format", "json", "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["trees"].as_array().unwrap().len(), 5);
    assert_eq!(v["schema"], "agtrees/1");
}

#[test]
fn exact_growth_law_at_three_leaves() {
    let out = tmp("law.csv");
    assert_eq!(run(&["grow", "--n", "3", "--exact", "--alpha", "2/3", "--gamma", "1/3", "--format", "csv", "--out", out.to_str().unwrap()]), EXIT_OK);
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "state,probability");
    // three binary trees and the star, each with probability 1/4
    assert_eq!(lines.len(), 5);
    assert!(lines[1..].iter().all(|l| l.ends_with(",1/4")));
}

#[test]
fn verify_exit_code_reflects_the_checks() {
    assert_eq!(run(&["verify", "--check", "stationarity", "--n", "4", "--alpha", "2/3", "--gamma", "1/3"]), EXIT_OK);
    assert_eq!(run(&["verify", "--check", "kernel-equality", "--n", "4"]), EXIT_OK);
    assert_eq!(run(&["verify", "--check", "lumpability", "--n", "4", "--k", "2"]), EXIT_OK);
    // the conditional-law clause of the decorated composite does not hold
    assert_eq!(run(&["verify", "--check", "intertwining", "--n", "4", "--k", "2", "--alpha", "2/3", "--gamma", "1/3"]), EXIT_FAIL);
}

#[test]
fn verify_json_report_lists_checks_and_neighbour_laws() {
    let out = tmp("verify.json");
    let code = run(&["verify", "--check", "kernel-equality", "--n", "4", "--alpha", "3/4", "--gamma", "1/4", "--report", "json", "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["pass"], true);
    assert!(!v["checks"].as_array().unwrap().is_empty());
    let laws = v["reports"]["i_tilde_laws"].as_array().unwrap();
    assert!(laws.iter().all(|r| r["implemented"].is_array() && r["alternative"].is_array()));
}

#[test]
fn project_outputs_both_representations() {
    let out = tmp("project.json");
    assert_eq!(run(&["project", "--tree", "((1,3),(2,4,5))", "--k", "2", "--format", "json", "--out", out.to_str().unwrap()]), EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let p = &v["projections"][0];
    assert_eq!(p["decorated"]["shape"], "(1,2)");
    let masses: u64 = p["decorated"]["parts"].as_array().unwrap().iter().map(|x| x["mass"].as_u64().unwrap()).sum();
    assert_eq!(masses, 5);
}

#[test]
fn mc_thresholds_decide_the_exit_code() {
    let common = ["mc", "--space", "nonplanar", "--n", "4", "--steps", "20000", "--burn-in", "100", "--reference", "exact", "--alpha", "2/3", "--gamma", "1/3"];
    let mut pass: Vec<&str> = common.to_vec();
    pass.extend(["--tv-max", "0.05"]);
    assert_eq!(run(&pass), EXIT_OK);
    let mut fail: Vec<&str> = common.to_vec();
    fail.extend(["--tv-max", "0.0"]);
    assert_eq!(run(&fail), EXIT_FAIL);
}

#[test]
fn chain_and_scaling_run() {
    let out = tmp("chain.txt");
    assert_eq!(run(&["chain", "--space", "decorated", "--n", "10", "--k", "3", "--steps", "5", "--out", out.to_str().unwrap()]), EXIT_OK);
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 6);
    let dir = tmp("scaling");
    let code = run(&["scaling", "--ns", "10,20", "--horizon", "20", "--replicas", "2", "--out", dir.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(dir.join("summary.json").exists());
}
