//! End-to-end runs of the CLI: exit-code contract, report files, and
//! byte-level determinism.

use conjlab::cli::{parse_config, run, EXIT_CHECK_FAILED, EXIT_DIVERGENT_WEIGHT, EXIT_OK};
use std::path::Path;
use std::process::Command;

fn small_config(command: &str, out: &Path, extra: &str) -> String {
    format!(
        "command = {command}\n\
         seed = 42\n\
         grid_radial = 48\n\
         grid_angular = 128\n\
         tree_depth = 5\n\
         max_degree = 6\n\
         family_count = 4\n\
         samples = 120\n\
         output = {}\n\
         {extra}",
        out.display()
    )
}

#[test]
fn check_weight_passes_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("reports");
    let config =
        parse_config(&small_config("check-weight", &out, "weight = power:0.5\nq = 2\n")).unwrap();
    assert_eq!(run(&config), EXIT_OK);
    assert!(out.join("checks.csv").is_file());
    assert!(out.join("summary.json").is_file());
    // No stray temp files after the atomic rename.
    assert!(!out.join("checks.tmp").exists());
    let summary = std::fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("\"bb_constant\""));
}

#[test]
fn radial_table_weight_flows_through_check_weight() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("reports");
    let table = dir.path().join("weight.txt");
    std::fs::write(&table, "# tabulated weight\n0.2 1.0\n0.5 2.0\n0.9 1.5\n").unwrap();
    let config = parse_config(&small_config(
        "check-weight",
        &out,
        &format!("weight = radial-table:{}\nq = 2\n", table.display()),
    ))
    .unwrap();
    assert_eq!(run(&config), EXIT_OK);
    let summary = std::fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("radial-table"));
}

#[test]
fn divergent_weight_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("reports");
    let config =
        parse_config(&small_config("check-weight", &out, "weight = power:-1.5\nq = 2\n")).unwrap();
    assert_eq!(run(&config), EXIT_DIVERGENT_WEIGHT);
}

#[test]
fn violating_tree_table_exits_one_with_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("reports");
    // b jumps at a level-1 node with no d budget anywhere.
    let table_path = dir.path().join("bad_tree.txt");
    std::fs::write(&table_path, "0 0 0.0 0.0\n1 0 1.0 0.0\n1 1 0.0 0.0\n").unwrap();
    let config = parse_config(&format!(
        "command = verify-goodlambda\ntree_table = {}\noutput = {}\n",
        table_path.display(),
        out.display()
    ))
    .unwrap();
    assert_eq!(run(&config), EXIT_CHECK_FAILED);
    let rows = std::fs::read_to_string(out.join("goodlambda.csv")).unwrap();
    let violation_rows: Vec<&str> = rows
        .lines()
        .filter(|l| l.starts_with("bd_inequality") && l.contains("table:1:0"))
        .collect();
    assert!(!violation_rows.is_empty(), "expected a bd violation row:\n{rows}");
    let summary = std::fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("\"pass\": false"));
}

#[test]
fn valid_tree_table_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("reports");
    let table_path = dir.path().join("tree.txt");
    std::fs::write(&table_path, "0 0 0.5 0.5\n1 0 0.75 0.25\n1 1 0.6 0.25\n").unwrap();
    let config = parse_config(&format!(
        "command = verify-goodlambda\ntree_table = {}\noutput = {}\n",
        table_path.display(),
        out.display()
    ))
    .unwrap();
    assert_eq!(run(&config), EXIT_OK);
}

#[test]
fn full_report_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let config = parse_config(&small_config("full-report", out, "weight = unit\n")).unwrap();
        assert_eq!(run(&config), EXIT_OK);
    }
    for name in ["checks.csv", "goodlambda.csv", "bounds.csv", "summary.json"] {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn binary_reports_config_errors() {
    let output = Command::new(env!("CARGO_BIN_EXE_conjlab"))
        .args(["full-report"]) // no seed
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("seed"), "stderr: {stderr}");
}

#[test]
fn binary_runs_check_weight() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("reports");
    let output = Command::new(env!("CARGO_BIN_EXE_conjlab"))
        .args([
            "check-weight",
            "--weight=unit",
            "--q=2",
            &format!("--output={}", out.display()),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    assert!(out.join("summary.json").is_file());
}

#[test]
fn env_var_sets_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("from_env");
    let output = Command::new(env!("CARGO_BIN_EXE_conjlab"))
        .env("CONJLAB_OUT_DIR", &out)
        .args(["check-weight", "--weight=unit"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    assert!(out.join("summary.json").is_file());
}
