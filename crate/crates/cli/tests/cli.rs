//! End-to-end tests of the `nedtree` binary: exit codes, JSON output
//! shapes, and the file-based subcommand surfaces.

use std::path::Path;
use std::process::{Command, Output};

fn nedtree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nedtree"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

#[test]
fn decompose_chain_product_json() {
    let out = nedtree(&["decompose", "--expr", "x*y*z", "--vars", "x,y,z"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let defs = v["definitions"].as_array().unwrap();
    assert_eq!(defs.len(), 2);
    assert_eq!(defs[0]["atom"]["kind"], "bilinear");
    assert_eq!(defs[1]["aux"], "y_temp_2");
    assert_eq!(v["linear"]["terms"]["y_temp_2"], 1.0);
}

#[test]
fn unknown_subcommand_exits_2() {
    let out = nedtree(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_failure_exits_3() {
    // x^y is unsupported: pipeline error (4). A failing equivalence needs a
    // corrupted decomposition, which the CLI cannot produce; instead check
    // a domain where rejections dominate: log over a mostly-negative box is
    // not reachable either (bounds are clamped). Exercise exit 3 via an
    // expression whose decomposition diverges under sampling error: none
    // exists by construction, so assert the passing path and the
    // pipeline-error path here.
    let ok = nedtree(&["check", "--expr", "x*y", "--vars", "x,y", "--samples", "50"]);
    assert_eq!(ok.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&ok)).unwrap();
    assert_eq!(v["verdict"], "pass");

    let bad = nedtree(&["check", "--expr", "x^y", "--vars", "x,y"]);
    assert_eq!(bad.status.code(), Some(4));
    let v: serde_json::Value = serde_json::from_str(&stdout(&bad)).unwrap();
    assert_eq!(v["error"]["kind"], "pipeline");
}

#[test]
fn parse_errors_are_json_objects() {
    let out = nedtree(&["decompose", "--expr", "3 *", "--format", "json"]);
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["error"]["kind"], "usage");
}

#[test]
fn parse_relation_flag() {
    let out = nedtree(&["parse", "--relation", "x + y <= 10"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["relation"], "<=");
    assert_eq!(v["lhs"]["op"], "sum");
}

#[test]
fn emit_from_pool_file() {
    let dir = tempfile::tempdir().unwrap();
    let pool_path = dir.path().join("pool.json");
    std::fs::write(
        &pool_path,
        serde_json::json!({
            "Parameters_List": [],
            "Variables_List": [
                {"symbol": "x", "Meaning": "units", "Type": "continuous", "Range": "0.001 <= x <= 10"}
            ],
            "Constraint_Table": [["cap", "x^0.3 <= 2", "sentence numbers:1"]],
            "Objective": {"Objective_sentence": "Maximize x", "Mathematical_expressions": "x"},
            "Problem_Type": "NLP"
        })
        .to_string(),
    )
    .unwrap();

    let py = dir.path().join("model.py");
    let out = nedtree(&[
        "emit",
        "--backend",
        "gurobi-python",
        "--in",
        pool_path.to_str().unwrap(),
        "--out",
        py.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let src = std::fs::read_to_string(&py).unwrap();
    assert!(src.contains("addGenConstrPow"));

    // Neutral emission from the same pool, then re-emit from the IR file.
    let ir_path = dir.path().join("model.json");
    let out = nedtree(&[
        "emit",
        "--backend",
        "neutral-json",
        "--in",
        pool_path.to_str().unwrap(),
        "--out",
        ir_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = nedtree(&[
        "emit",
        "--backend",
        "gurobi-python",
        "--in",
        ir_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("addGenConstrPow"));
}

fn record_demo_fixtures(dir: &Path) {
    use nedtree_core::elements::BirdeyeExtraction;
    use nedtree_core::extraction::fixtures;
    let problem = "Minimize the total cost 3*x. The value of x is between 2 and 10.";
    fixtures::record_birdeye(
        dir,
        problem,
        "analysis",
        &serde_json::json!({"Parameters_List": []}).to_string(),
    )
    .unwrap();
    let birdeye = BirdeyeExtraction::default();
    fixtures::record_sentence(
        dir,
        "Minimize the total cost 3*x.",
        &birdeye,
        "analysis",
        &serde_json::json!({
            "Sentence_Scanning": [["1", "Minimize...", "objective"]],
            "Variables_List": [],
            "Constraint_Table": [],
            "Objective": {
                "Objective_sentence": "Minimize the total cost 3*x",
                "Mathematical_expressions": "3*x"
            },
            "Problem_Type": "MILP"
        })
        .to_string(),
    )
    .unwrap();
    fixtures::record_sentence(
        dir,
        "The value of x is between 2 and 10.",
        &birdeye,
        "analysis",
        &serde_json::json!({
            "Sentence_Scanning": [["2", "The value...", "bounds"]],
            "Variables_List": [
                {"symbol": "x", "Meaning": "amount", "Type": "continuous", "Range": "2 <= x <= 10"}
            ],
            "Constraint_Table": [],
            "Objective": {"Objective_sentence": "", "Mathematical_expressions": ""},
            "Problem_Type": "MILP"
        })
        .to_string(),
    )
    .unwrap();
}

#[test]
fn extract_with_stub_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    record_demo_fixtures(dir.path());
    let problem_path = dir.path().join("problem.txt");
    std::fs::write(
        &problem_path,
        "Minimize the total cost 3*x. The value of x is between 2 and 10.",
    )
    .unwrap();
    let artifacts = dir.path().join("artifacts");
    let out = nedtree(&[
        "--artifacts",
        artifacts.to_str().unwrap(),
        "extract",
        "--problem",
        problem_path.to_str().unwrap(),
        "--client",
        "stub",
        "--fixtures",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["Problem_Type"], "MILP");
    assert_eq!(v["Variables_List"][0]["symbol"], "x");
    // Transcripts were persisted.
    assert!(artifacts.join("transcripts.json").exists());
}

#[test]
fn extract_missing_fixture_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let problem_path = dir.path().join("problem.txt");
    std::fs::write(&problem_path, "Minimize x.").unwrap();
    let out = nedtree(&[
        "extract",
        "--problem",
        problem_path.to_str().unwrap(),
        "--client",
        "stub",
        "--fixtures",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn bench_stub_neutral_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    record_demo_fixtures(dir.path());
    let dataset_path = dir.path().join("dataset.json");
    std::fs::write(
        &dataset_path,
        serde_json::json!({
            "1": {
                "index": 1,
                "question": "Minimize the total cost 3*x. The value of x is between 2 and 10.",
                "answer": 6.0
            }
        })
        .to_string(),
    )
    .unwrap();
    let report_path = dir.path().join("report.json");
    let out = nedtree(&[
        "bench",
        "--dataset",
        dataset_path.to_str().unwrap(),
        "--client",
        "stub",
        "--fixtures",
        dir.path().to_str().unwrap(),
        "--backend",
        "neutral-json",
        "--repeats",
        "2",
        "--seed",
        "42",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["seed"], 42);
    assert_eq!(report["accuracy_mean"], 1.0);
    assert_eq!(report["pass_rate_mean"], 1.0);
}

#[test]
fn config_file_merges_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("nedtree.toml");
    std::fs::write(&config_path, "samples = 37\nseed = 7\n").unwrap();
    // Flag --samples wins; seed comes from the config.
    let out = nedtree(&[
        "--config",
        config_path.to_str().unwrap(),
        "check",
        "--expr",
        "x*y",
        "--vars",
        "x,y",
        "--samples",
        "21",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["samples"], 21);
}
