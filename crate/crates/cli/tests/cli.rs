//! End-to-end contract of the `pchaos` binary: stdout shapes, exit codes,
//! artifact files, and worker-count independence.

use std::path::PathBuf;
use std::process::{Command, Output};

fn pchaos(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pchaos"))
        .args(args)
        .output()
        .expect("binary runs")
}

/// Per-test scratch directory, recreated empty on entry.
fn fresh_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pchaos-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).expect("temp dir");
    dir
}

fn stdout_of(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

#[test]
fn partitions_count_prints_the_bare_number() {
    let out = pchaos(&["partitions", "--layout", "2,2,2", "--class", "ge2", "--count"]);
    assert_eq!(stdout_of(&out), "12\n");

    // without --count the full listing carries the same number of rows
    let out = pchaos(&["partitions", "--layout", "2,2,2", "--class", "ge2"]);
    let listing = stdout_of(&out);
    assert_eq!(listing.lines().count(), 13, "header plus 12 rows:\n{listing}");
    assert_eq!(listing.lines().next(), Some("index,partition,blocks"));
}

#[test]
fn moment_total_row_is_exact() {
    // second moment of a single order-2 integral with unit kernel on one
    // unit atom: two matchings, each contributing 1
    let out = pchaos(&[
        "moment", "--space", "atoms:1", "--kernel", "const:2:1", "--kernel", "const:2:1",
        "--t", "1", "--method", "exact",
    ]);
    let csv = stdout_of(&out);
    let total = csv.lines().last().expect("rows");
    assert!(total.starts_with("total,,,2.0000000000000000e0,"), "{total}");
    assert_eq!(csv.lines().filter(|l| l.starts_with("term,")).count(), 2);
}

#[test]
fn json_format_wraps_metadata_and_csv() {
    let out = pchaos(&[
        "--format", "json", "moment", "--space", "atoms:1", "--kernel", "const:2:1",
        "--kernel", "const:2:1", "--t", "1", "--method", "exact",
    ]);
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).expect("json stdout");
    assert_eq!(doc["metadata"]["parameters"]["value"], serde_json::json!(2.0));
    assert!(doc["csv"].as_str().expect("csv field").starts_with("kind,partition,"));
}

#[test]
fn malformed_requests_exit_two() {
    let cases: [&[&str]; 3] = [
        // unknown kernel spec
        &["moment", "--space", "atoms:1", "--kernel", "bogus:1", "--method", "exact"],
        // sampling method without a seed
        &["moment", "--space", "box:0,1", "--kernel", "const:1:1", "--method", "mc:1000"],
        // simulate with nothing to evaluate
        &["simulate", "--space", "box:0,1", "--seed", "7"],
    ];
    for args in cases {
        let out = pchaos(args);
        assert_eq!(out.status.code(), Some(2), "args: {args:?}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.starts_with("invalid request:"), "args: {args:?}, stderr: {err}");
    }
}

#[test]
fn numerical_failures_exit_three_and_write_diagnostics() {
    let dir = fresh_dir("diag");
    let stem = dir.join("run");
    let out = pchaos(&[
        "simulate", "--space", "box:0,1", "--mecke", "count-cap:3", "--t", "1",
        "--reps", "1", "--seed", "5", "--out", stem.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let diag: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(stem.with_extension("diag.json")).unwrap())
            .expect("diagnostics json");
    assert!(diag["error"].as_str().unwrap().contains("sample shortage"));
    assert_eq!(diag["seed"], serde_json::json!(5));
    // the run failed, so no result table may appear
    assert!(!stem.with_extension("csv").exists());
}

#[test]
fn out_writes_the_csv_json_pair() {
    let dir = fresh_dir("pair");
    let stem = dir.join("parts");
    let out = pchaos(&[
        "partitions", "--layout", "2,2", "--class", "nonflat", "--out", stem.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(stem.with_extension("csv")).expect("csv file");
    assert!(csv.starts_with("index,partition,blocks\n"));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(stem.with_extension("json")).unwrap())
            .expect("metadata json");
    assert_eq!(meta["module"], serde_json::json!("partitions"));
}

#[test]
fn worker_count_never_changes_the_bytes() {
    let dir = fresh_dir("workers");
    let mut bytes = Vec::new();
    for (label, workers) in [("w1", "1"), ("w4", "4")] {
        let stem = dir.join(label);
        let out = pchaos(&[
            "--seed", "42", "--workers", workers, "--out", stem.to_str().unwrap(),
            "simulate", "--space", "box:0,1;0,1", "--kernel", "pair-dist:0.4",
            "--t", "20", "--reps", "300",
        ]);
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        bytes.push(std::fs::read(stem.with_extension("csv")).expect("csv file"));
    }
    assert_eq!(bytes[0], bytes[1], "replication table depends on worker count");
    assert!(bytes[0].starts_with(b"rep,value\n"));
}
