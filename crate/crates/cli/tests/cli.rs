//! End-to-end checks of the binary: exit codes, wire formats, determinism.

use std::path::Path;
use std::process::{Command, Output};

fn otkit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_otkit"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

/// 5-point unit line with uniform mass and a collapse target.
fn line_fixture(dir: &Path) {
    let out = otkit(dir, &["generate", "--kind", "line", "--n", "5", "--out", "inst"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    write(dir, "nu.json", r#"{"weights": [0.6, 0.0, 0.0, 0.2, 0.2], "total": 1.0}"#);
}

#[test]
fn solve_reports_value_plan_and_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    line_fixture(tmp.path());
    let out = otkit(
        tmp.path(),
        &["solve", "--metric", "inst.space.json", "--mu", "inst.mu.json", "--nu", "nu.json",
          "--cost", "p:2"],
    );
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // 0.2 moves one step and 0.2 moves two: 0.2·1 + 0.2·4
    assert_eq!(doc["value"].as_f64().unwrap(), 1.0);
    let plan_text = serde_json::to_string(&doc["plan"]).unwrap();
    let plan = otkit_core::json::parse_plan(&plan_text, 5).unwrap();
    assert!(plan.entries().iter().all(|e| e.mass > 0.0));
    assert!(doc["diagnostics"]["max_dual_slack"].as_f64().unwrap() < 1e-6);
}

#[test]
fn winf_flag_switches_to_bottleneck() {
    let tmp = tempfile::tempdir().unwrap();
    line_fixture(tmp.path());
    let out = otkit(
        tmp.path(),
        &["solve", "--metric", "inst.space.json", "--mu", "inst.mu.json", "--nu", "nu.json",
          "--winf"],
    );
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["value"].as_f64().unwrap(), 2.0);
}

#[test]
fn corrupted_metric_file_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    line_fixture(tmp.path());
    write(tmp.path(), "bad.json", "{\"n\": 3, \"dist\": [[0, 1], [1, 0]]");
    let out = otkit(
        tmp.path(),
        &["solve", "--metric", "bad.json", "--mu", "inst.mu.json", "--nu", "nu.json", "--winf"],
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("parsing metric file"), "stderr: {err}");
}

#[test]
fn flagged_crossing_exits_one_with_gain() {
    let tmp = tempfile::tempdir().unwrap();
    line_fixture(tmp.path());
    write(
        tmp.path(),
        "cross.json",
        r#"{"entries": [[0, 3, 0.2], [3, 0, 0.2], [1, 1, 0.2], [2, 2, 0.2], [4, 4, 0.2]]}"#,
    );
    let out = otkit(
        tmp.path(),
        &["monotone-check", "--metric", "inst.space.json", "--plan", "cross.json",
          "--cost", "p:2", "--k", "4"],
    );
    assert_eq!(out.status.code(), Some(1));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["violation"]["gain"].as_f64().unwrap(), 18.0);
}

#[test]
fn chain_check_emits_the_six_column_table() {
    let tmp = tempfile::tempdir().unwrap();
    line_fixture(tmp.path());
    let global = otkit(
        tmp.path(),
        &["chain-check", "--metric", "inst.space.json", "--mu", "inst.mu.json", "--cost", "p:2"],
    );
    // adjacent pairs never pass, so the unrestricted verdict is a no
    assert_eq!(global.status.code(), Some(1));
    let table = String::from_utf8_lossy(&global.stdout);
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("x,y,d,h_d,best_chain,slack"));
    assert_eq!(lines.count(), 10); // C(5,2) pairs
    let scoped = otkit(
        tmp.path(),
        &["chain-check", "--metric", "inst.space.json", "--mu", "inst.mu.json", "--cost", "p:2",
          "--scale", "1.5"],
    );
    assert_eq!(scoped.status.code(), Some(0));
}

#[test]
fn verify_bound_round_trips_an_estimated_profile() {
    let tmp = tempfile::tempdir().unwrap();
    line_fixture(tmp.path());
    let est = otkit(
        tmp.path(),
        &["rho", "--metric", "inst.space.json", "--mu", "inst.mu.json", "--cost", "p:2",
          "--levels", "1", "--out", "rho.json"],
    );
    assert!(est.status.success(), "{}", String::from_utf8_lossy(&est.stderr));
    let verify = otkit(
        tmp.path(),
        &["verify-bound", "--metric", "inst.space.json", "--mu", "inst.mu.json",
          "--nu", "nu.json", "--cost", "p:2", "--plan", "--rho", "rho.json"],
    );
    assert!(verify.status.success(), "{}", String::from_utf8_lossy(&verify.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&verify.stdout).unwrap();
    assert_eq!(doc["pass"], serde_json::Value::Bool(true));
}

#[test]
fn suite_bundles_are_byte_identical_for_a_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let run = || {
        let out = otkit(
            tmp.path(),
            &["suite", "--only", "solver-oracles,cyclical-monotonicity", "--seed", "11"],
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    let first = run();
    assert_eq!(first, run());
    let doc: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(doc["config"]["seed"].as_u64().unwrap(), 11);
    assert_eq!(doc["reports"].as_array().unwrap().len(), 2);
}

#[test]
fn empty_suite_selection_is_a_pass() {
    let tmp = tempfile::tempdir().unwrap();
    let out = otkit(tmp.path(), &["suite", "--only", ""]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["reports"].as_array().unwrap().len(), 0);
    assert_eq!(doc["all_pass"], serde_json::Value::Bool(true));
}

#[test]
fn unknown_suite_selection_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = otkit(tmp.path(), &["suite", "--only", "nosuch"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn identity_snowflake_matches_the_line() {
    // The snowflake generator lives on the normalized grid k/(n-1), so give
    // the line the same spacing before comparing.
    let tmp = tempfile::tempdir().unwrap();
    for (kind, name, extra) in [
        ("line", "a", Some(("--spacing", "0.2"))),
        ("snowflake", "b", Some(("--s", "1.0"))),
    ] {
        let mut args = vec!["generate", "--kind", kind, "--n", "6", "--out", name];
        if let Some((k, v)) = extra {
            args.push(k);
            args.push(v);
        }
        let out = otkit(tmp.path(), &args);
        assert!(out.status.success());
    }
    let read = |p: &str| -> serde_json::Value {
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join(p)).unwrap()).unwrap()
    };
    assert_eq!(read("a.space.json")["dist"], read("b.space.json")["dist"]);
}

#[test]
fn converge_emits_series_rows_per_term() {
    let tmp = tempfile::tempdir().unwrap();
    line_fixture(tmp.path());
    for (i, e) in [0.5f64, 0.25, 0.125].iter().enumerate() {
        write(
            tmp.path(),
            &format!("t{i}.json"),
            &format!(
                r#"{{"weights": [{}, {}, 0.0, 0.0, {}], "total": 1.0}}"#,
                (1.0 - e) / 2.0,
                (1.0 - e) / 2.0,
                e
            ),
        );
    }
    write(tmp.path(), "lim.json", r#"{"weights": [0.5, 0.5, 0.0, 0.0, 0.0], "total": 1.0}"#);
    let out = otkit(
        tmp.path(),
        &["converge", "--metric", "inst.space.json", "--seq", "t0.json,t1.json,t2.json",
          "--limit", "lim.json", "--p", "2", "--format", "csv"],
    );
    assert!(out.status.success());
    let table = String::from_utf8_lossy(&out.stdout);
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("term,wp,hausdorff,winf"));
    assert_eq!(lines.count(), 3);
}
