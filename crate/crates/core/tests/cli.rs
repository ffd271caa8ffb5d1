mod common;

use std::fs;
use std::process::{Command, Output};

use common::{fixture, read_fixture};

fn metakg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metakg"))
        .args(args)
        .env("METAKG_LOG", "error")
        .output()
        .expect("binary runs")
}

fn path_str(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

fn trace_json(path: &std::path::Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn query_chest_pain_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let conf = fixture("chest_pain/run.conf");
    let question = read_fixture("chest_pain/question.txt");
    let out = dir.path().join("trace.json");
    let o = metakg(&["query", question.trim(), "--config", path_str(&conf), "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("GERD"));

    let t = trace_json(&out);
    let seed = &t["trace"]["seeds"][0];
    assert_eq!(seed["seed"]["label"], "Chest pain");
    assert_eq!(seed["trace"]["records"].as_array().unwrap().len(), 2);
    assert!(t["trace"]["evidence_text"].as_str().unwrap().contains("Chest pain symptom_of GERD"));
    assert!(t["trace"]["prompt"].as_str().unwrap().contains("Evidence 1:"));

    let out2 = dir.path().join("plain.json");
    let o = metakg(&[
        "query",
        question.trim(),
        "--config",
        path_str(&conf),
        "--out",
        path_str(&out2),
        "--disable-cycle",
    ]);
    assert!(o.status.success());
    let t = trace_json(&out2);
    assert_eq!(t["trace"]["seeds"][0]["trace"]["records"].as_array().unwrap().len(), 1);
    assert!(!t["trace"]["evidence_text"].as_str().unwrap().contains("GERD"));
}

#[test]
fn unknown_flag_fails() {
    let o = metakg(&["query", "q", "--no-such-flag"]);
    assert!(!o.status.success());
    let o = metakg(&["batch", "--params.bogus", "1"]);
    assert!(!o.status.success());
}

#[test]
fn bad_param_value_fails() {
    let conf = fixture("chest_pain/run.conf");
    let o = metakg(&["query", "q", "--config", path_str(&conf), "--params.tau_c", "2"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("tau_c"));
}

#[test]
fn build_kg_missing_dataset_shows_usage() {
    let o = metakg(&["build-kg"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    let o = metakg(&["build-kg", "--dataset", "/nonexistent/data.jsonl"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn build_kg_empty_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("empty.jsonl");
    fs::write(&data, "").unwrap();
    let out = dir.path().join("kg.tsv");
    let o = metakg(&[
        "build-kg",
        "--config",
        path_str(&fixture("builder/run.conf")),
        "--dataset",
        path_str(&data),
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(&out).unwrap(), "");
}

#[test]
fn build_kg_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("kg.tsv");
    let conf = fixture("builder/run.conf");
    let args = ["build-kg", "--config", path_str(&conf), "--out", path_str(&out)];
    let o = metakg(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["records_processed"], 3);
    assert_eq!(report["triples_written"], 7);
    assert_eq!(report["warnings"], 3);
    let first = fs::read(&out).unwrap();
    assert_eq!(first, read_fixture("builder/golden.tsv").as_bytes());
    assert!(metakg(&args).status.success());
    assert_eq!(fs::read(&out).unwrap(), first);
}

#[test]
fn batch_scores_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let conf = fixture("batch4/run.conf");
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = metakg(&["batch", "--config", path_str(&conf), "--out", path_str(&out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let a = run("a");
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("report.json")).unwrap()).unwrap();
    let agg = &report["aggregates"];
    assert_eq!(agg["correct_pct"], 75.0);
    assert_eq!(agg["wrong_pct"], 0.0);
    assert_eq!(agg["fail_pct"], 25.0);
    assert_eq!(report["questions"][3]["outcome"], "Fail");

    let b = run("b");
    for f in ["report.json", "report.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    let csv = fs::read_to_string(a.join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);

    let o = metakg(&["metrics", path_str(&a.join("traces"))]);
    assert!(o.status.success());
    let m: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(m["correct"], 3);
    assert_eq!(m["fail"], 1);
    assert_eq!(m["prr"], agg["prr"]);
}

#[test]
fn batch_empty_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("empty.jsonl");
    fs::write(&data, "").unwrap();
    let out = dir.path().join("out");
    let o = metakg(&[
        "batch",
        "--config",
        path_str(&fixture("batch4/run.conf")),
        "--dataset",
        path_str(&data),
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["aggregates"]["total"], 0);
    assert_eq!(report["aggregates"]["correct"], 0);
}

#[test]
fn batch_with_ablation_flags() {
    let dir = tempfile::tempdir().unwrap();
    let conf = metakg::scenario::Scenario::ablation().write_to(dir.path()).unwrap();
    let out = dir.path().join("naive");
    let o = metakg(&["batch", "--config", path_str(&conf), "--out", path_str(&out), "--naive-restart"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("correct=65.00%"));
    let out = dir.path().join("full");
    let o = metakg(&["batch", "--config", path_str(&conf), "--out", path_str(&out)]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("correct=90.00%"));
}
