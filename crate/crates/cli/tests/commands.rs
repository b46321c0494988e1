use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn whatif(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_whatif")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate_corpus(dir: &Path) -> PathBuf {
    let out = dir.join("traces.ndjson");
    let status = whatif(&[
        "generate",
        "--config",
        path(&fixture("gen-small.json")),
        "--model",
        path(&fixture("car-insurance.dm")),
        "--out",
        path(&out),
    ]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    out
}

#[test]
fn validate_car_insurance() {
    let out = whatif(&["validate", "--model", path(&fixture("car-insurance.dm"))]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("local \"Car Insurance\" -> \"Contracts\""), "{stdout}");
}

#[test]
fn validate_merged_example_prints_summary() {
    let out = whatif(&[
        "validate",
        "--model",
        path(&fixture("car-insurance.dm")),
        "--delta",
        path(&fixture("remote-contracts.dms")),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("remote \"Car Insurance\" -> \"Contracts\" overhead 10 propagation none"));
    assert_eq!(stdout.matches("potential microservice").count(), 2);
}

#[test]
fn validate_reports_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.dm");
    std::fs::write(
        &bad,
        "component \"A\" {\n  serviceCandidate a\n}\nlocal \"A\" -> \"Nowhere\"\n",
    )
    .unwrap();
    let out = whatif(&["validate", "--model", path(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(
        stderr.contains("bad.dm:4:14: error: unknown component \"Nowhere\""),
        "{stderr}"
    );
}

#[test]
fn generate_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = std::fs::read(generate_corpus(a.path())).unwrap();
    let second = std::fs::read(generate_corpus(b.path())).unwrap();
    assert_eq!(first, second);
    assert_eq!(first.iter().filter(|&&c| c == b'\n').count(), 200);
}

#[test]
fn generate_rejects_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("gen.json");
    std::fs::write(
        &config,
        r#"{"traceCount": 1, "maxRemoteInvocationsPerTrace": 1, "maxDepth": 2,
            "entityAccessProbability": 1.5, "abortProbability": 0, "seed": 1}"#,
    )
    .unwrap();
    let out = whatif(&[
        "generate",
        "--config",
        path(&config),
        "--model",
        path(&fixture("car-insurance.dm")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("entityAccessProbability"));
}

#[test]
fn empty_delta_reports_no_changes() {
    let dir = tempfile::tempdir().unwrap();
    let traces = generate_corpus(dir.path());
    let empty = dir.path().join("empty.dms");
    std::fs::write(&empty, "").unwrap();
    let report = dir.path().join("report.json");
    let out = whatif(&[
        "analyze",
        "--model",
        path(&fixture("car-insurance.dm")),
        "--delta",
        path(&empty),
        "--traces",
        path(&traces),
        "--out",
        path(&report),
        "--fail-on-significant",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    let summary = &json["summary"];
    assert_eq!(summary["trace_count"], 200);
    assert_eq!(summary["new_issues"], 0);
    assert_eq!(summary["outcome_changes"], 0);
    assert_eq!(summary["significant_use_cases"], 0);
    assert_eq!(json["traces"].as_array().unwrap().len(), 0);
}

#[test]
fn significant_findings_exit_two_only_with_flag() {
    let dir = tempfile::tempdir().unwrap();
    let traces = generate_corpus(dir.path());
    let (model, delta) = (fixture("car-insurance.dm"), fixture("remote-contracts.dms"));
    let args = [
        "analyze",
        "--model",
        path(&model),
        "--delta",
        path(&delta),
        "--traces",
        path(&traces),
        "--format",
        "json",
    ];
    let plain = whatif(&args);
    assert_eq!(plain.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_slice(&plain.stdout).unwrap();
    assert_eq!(json["summary"]["significant_use_cases"], 1);

    let mut flagged = args.to_vec();
    flagged.push("--fail-on-significant");
    assert_eq!(whatif(&flagged).status.code(), Some(2));
}

#[test]
fn reports_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let traces = generate_corpus(dir.path());
    let run = |workers: &str| {
        let out = whatif(&[
            "analyze",
            "--model",
            path(&fixture("car-insurance.dm")),
            "--delta",
            path(&fixture("remote-contracts.dms")),
            "--traces",
            path(&traces),
            "--workers",
            workers,
            "--format",
            "json",
        ]);
        assert!(out.status.success());
        out.stdout
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn analyze_rejects_invalid_trace_file() {
    let dir = tempfile::tempdir().unwrap();
    let traces = dir.path().join("broken.ndjson");
    std::fs::write(&traces, "{\"trace_id\": 1}\n").unwrap();
    let out = whatif(&[
        "analyze",
        "--model",
        path(&fixture("car-insurance.dm")),
        "--traces",
        path(&traces),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn analyze_rejects_alpha_out_of_range() {
    let out = whatif(&[
        "analyze",
        "--model",
        path(&fixture("car-insurance.dm")),
        "--traces",
        "/nonexistent",
        "--alpha",
        "1.5",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha"));
}
