//! Black-box tests of the installed binary: spawn it, parse its output,
//! check exit codes.

use std::io::Write;
use std::process::Command;

fn run(args: &[&str]) -> (String, String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_ballgrow"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        String::from_utf8(out.stdout).expect("utf8 stdout"),
        String::from_utf8(out.stderr).expect("utf8 stderr"),
        out.status.code().expect("exit code"),
    )
}

#[test]
fn spanner_with_stretch_check_reports_the_bound() {
    let (stdout, stderr, code) = run(&[
        "spanner",
        "--gen",
        "er:256:0.25",
        "--k",
        "2",
        "--seed",
        "1",
        "--check-stretch",
    ]);
    assert_eq!(code, 0, "stderr: {stderr}");
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["n"], 256);
    assert_eq!(v["k"], 2);
    assert!(v["max_stretch"].as_f64().unwrap() <= 3.0);
    assert!(v["h_edges"].as_u64().unwrap() > 0);
}

#[test]
fn single_vertex_cluster_prints_trivial_json() {
    let (stdout, _, code) = run(&["cluster", "--gen", "er:1:0", "--k", "2"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["n"], 1);
    assert_eq!(v["clusters"], 1);
    assert_eq!(v["clustering"]["center"], serde_json::json!([0]));
    assert_eq!(v["clustering"]["parent"], serde_json::json!([null]));
}

#[test]
fn cutprob_emits_passing_csv() {
    let (stdout, stderr, code) = run(&[
        "cutprob",
        "--gen",
        "grid:4:4",
        "--beta",
        "0.2",
        "--trials",
        "300",
        "--seed",
        "5",
    ]);
    assert_eq!(code, 0, "stderr: {stderr}");
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("u,v,w,frequency,bound,margin,status"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 24, "4x4 grid has 24 edges");
    for row in rows {
        assert!(
            row.ends_with(",pass") || row.ends_with(",vacuous"),
            "unexpected row: {row}"
        );
    }
}

#[test]
fn identical_invocations_are_byte_identical() {
    let args = ["spanner", "--gen", "er:48:0.2", "--k", "3", "--seed", "9"];
    let (a, _, ca) = run(&args);
    let (b, _, cb) = run(&args);
    assert_eq!(ca, 0);
    assert_eq!(cb, 0);
    assert_eq!(a, b);
}

#[test]
fn cluster_reads_edge_list_files() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    write!(file, "4 4\n0 1 1\n1 2 1\n2 3 1\n0 3 1\n").unwrap();
    let path = file.path().to_str().unwrap();
    let (stdout, stderr, code) = run(&["cluster", "--input", path, "--k", "2", "--format", "csv"]);
    assert_eq!(code, 0, "stderr: {stderr}");
    assert_eq!(stdout.lines().next(), Some("v,center,level,parent"));
    assert_eq!(stdout.lines().count(), 5);
}

#[test]
fn spanner_edge_list_matches_its_summary() {
    let (summary, _, c1) = run(&["spanner", "--gen", "er:40:0.3", "--k", "2", "--seed", "3"]);
    let (listing, _, c2) = run(&[
        "spanner",
        "--gen",
        "er:40:0.3",
        "--k",
        "2",
        "--seed",
        "3",
        "--format",
        "edge-list",
    ]);
    assert_eq!((c1, c2), (0, 0));
    let v: serde_json::Value = serde_json::from_str(&summary).unwrap();
    let h_edges = v["h_edges"].as_u64().unwrap() as usize;
    assert_eq!(listing.lines().count(), h_edges);
    for line in listing.lines() {
        let parts: Vec<&str> = line.split_whitespace().collect();
        assert_eq!(parts.len(), 3);
        assert_eq!(parts[2], "1");
    }
}

#[test]
fn sync_under_gamma_agrees_and_reports_init_cost() {
    let (stdout, stderr, code) = run(&[
        "sync",
        "--gen",
        "er:16:0.2",
        "--program",
        "leader",
        "--sync",
        "gamma",
        "--k",
        "3",
        "--seed",
        "3",
    ]);
    assert_eq!(code, 0, "stderr: {stderr}");
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["agree"], true);
    assert_eq!(
        v["counters"]["alg_msgs"].as_u64().unwrap(),
        v["counters"]["ack_msgs"].as_u64().unwrap()
    );
    assert!(v["gamma_init"]["init_cluster_counters"]["alg_msgs"].as_u64().unwrap() > 0);
}

#[test]
fn sync_accepts_an_explicit_schedule_file() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    for i in 0..500 {
        writeln!(file, "{i} 0.5").unwrap();
    }
    let path = file.path().to_str().unwrap();
    let (stdout, stderr, code) = run(&[
        "sync",
        "--gen",
        "path:4",
        "--sync",
        "alpha",
        "--schedule",
        path,
        "--format",
        "csv",
    ]);
    assert_eq!(code, 0, "stderr: {stderr}");
    assert!(stdout.contains("flood,alpha,true"));
}

#[test]
fn sync_rejects_a_schedule_that_runs_dry() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "0 0.5").unwrap();
    let path = file.path().to_str().unwrap();
    let (_, stderr, code) = run(&[
        "sync", "--gen", "path:4", "--sync", "alpha", "--schedule", path,
    ]);
    assert_eq!(code, 2);
    assert!(stderr.contains("schedule"), "stderr: {stderr}");
}

#[test]
fn sync_records_events_on_request() {
    let (stdout, _, code) = run(&[
        "sync", "--gen", "path:3", "--sync", "beta", "--events", "--seed", "1",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let events = v["events"].as_array().unwrap();
    assert!(!events.is_empty());
    assert!(events.iter().any(|e| e["kind"] == "alg"));
    assert!(events.iter().any(|e| e["kind"] == "ack"));
}

#[test]
fn verify_suite_passes_and_counts_instances() {
    let (stdout, stderr, code) = run(&["verify", "--instances", "25", "--seed", "1"]);
    assert_eq!(code, 0, "stderr: {stderr}");
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["ok"], true);
    assert_eq!(v["checks"][0]["instances"], 25);
}

#[test]
fn bad_inputs_exit_with_usage_errors() {
    let (_, stderr, code) = run(&["cluster", "--gen", "blah:3", "--k", "2"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("generator spec"));

    let (_, _, code) = run(&["cluster", "--gen", "path:4"]);
    assert_eq!(code, 2, "one of --k or --beta is required");

    let (_, stderr, code) = run(&["spanner", "--gen", "path:4", "--w-max", "2", "--k", "2"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("unweighted"));

    let (_, stderr, code) = run(&["sync", "--gen", "path:4", "--sync", "alpha", "--k", "2"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("gamma"));

    let (_, _, code) = run(&["sync", "--gen", "path:4", "--sync", "alpha", "--format", "edge-list"]);
    assert_eq!(code, 2);
}
