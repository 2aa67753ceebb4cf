use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn sod(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sod"))
        .args(args)
        .current_dir(root())
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn parse_then_serialize_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let parsed = sod(&["parse", "fixtures/profit.xw"]);
    assert_eq!(code(&parsed), 0);
    let json = dir.path().join("p.json");
    fs::write(&json, &parsed.stdout).unwrap();
    let back = sod(&["serialize", json.to_str().unwrap()]);
    assert_eq!(code(&back), 0);
    assert_eq!(stdout(&back), fs::read_to_string(root().join("fixtures/profit.xw")).unwrap());
}

#[test]
fn parse_error_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.xw");
    fs::write(&bad, "- - Write(range=\"A1\", value=\n").unwrap();
    let o = sod(&["parse", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("at 1:"));
    assert_eq!(code(&sod(&["parse", "no/such/file.xw"])), 2);
}

#[test]
fn validate_separates_warnings_from_errors() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("s.xw");
    fs::write(&f, "- - Frobnicate(x=1)\n").unwrap();
    let o = sod(&["validate", f.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("warning: unknown action Frobnicate"));
    fs::write(&f, "- - Write(range=\"A1\")\n").unwrap();
    let o = sod(&["validate", f.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("missing required argument value"));
    let corpus = sod(&["validate", "--corpus", "data/sodbench.jsonl", "--workbooks", "data/workbooks"]);
    assert_eq!(code(&corpus), 0, "{}", String::from_utf8_lossy(&corpus.stderr));
    assert!(stdout(&corpus).contains("111 instances ok"));
}

#[test]
fn dialects_agree_and_unknown_dialect_is_usage_error() {
    let vba = sod(&["transpile", "fixtures/copy_hello.bas", "--dialect", "vba"]);
    let gas = sod(&["transpile", "fixtures/copy_hello.gs", "--dialect", "gas"]);
    assert_eq!(code(&vba), 0);
    assert_eq!(stdout(&vba), stdout(&gas));
    assert!(stdout(&vba).contains("CopyPaste(source=\"Sheet1!A1:A5\", destination=\"Sheet1!B1:B5\")"));
    assert_eq!(code(&sod(&["transpile", "fixtures/copy_hello.bas", "--dialect", "cobol"])), 2);
}

#[test]
fn execute_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = sod(&[
        "execute",
        "fixtures/profit.xw",
        "--workbook",
        "data/workbooks/weekly-sales.json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let same = sod(&["compare", out.to_str().unwrap(), out.to_str().unwrap()]);
    assert_eq!(code(&same), 0);
    assert!(stdout(&same).contains("equivalent"));
    let differ = sod(&["compare", "data/workbooks/weekly-sales.json", out.to_str().unwrap()]);
    assert_eq!(code(&differ), 1);
    assert!(stdout(&differ).contains("Sheet1!D1"));
}

#[test]
fn prompt_has_alternating_turns() {
    let o = sod(&["prompt", "--corpus", "data/sodbench.jsonl", "--id", "weekly-sales-01", "--shots", "2"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let roles: Vec<&str> = v["messages"].as_array().unwrap().iter().map(|m| m["role"].as_str().unwrap()).collect();
    assert_eq!(roles, ["developer", "user", "assistant", "user", "assistant", "user"]);
    assert_eq!(code(&sod(&["prompt", "--corpus", "data/sodbench.jsonl", "--id", "nope"])), 2);
}

#[test]
fn evaluate_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = sod(&["evaluate", "--config", "configs/baseline.toml", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("| template | 107 |"));
    for f in ["records.csv", "records.jsonl", "latency.csv", "report.md", "report.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn remote_backend_needs_opt_in() {
    let o = sod(&["evaluate", "--config", "configs/remote.example.toml", "--out", "/nonexistent/x"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("allow-remote"));
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = sod(&[
        "sweep",
        "--config",
        "configs/baseline.toml",
        "--shots",
        "1..=3",
        "--backend",
        "exemplar",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("shots,metric,mean,moe"));
    assert_eq!(csv.lines().count(), 1 + 3 * 4);
    assert_eq!(code(&sod(&["sweep", "--config", "configs/baseline.toml", "--shots", "x"])), 2);
}

#[test]
fn rates_summary() {
    let o = sod(&["rates", "fixtures/rates.csv"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "total 3  exec 2 (67%)  pass 1 (33%)");
}

#[test]
fn rag_index_and_query() {
    let dir = tempfile::tempdir().unwrap();
    let docs = dir.path().join("docs");
    fs::create_dir(&docs).unwrap();
    fs::write(docs.join("charts.md"), "Charts are added with a source range and a chart type.").unwrap();
    fs::write(docs.join("filters.md"), "Filters hide rows whose values fail a criterion.").unwrap();
    let index = dir.path().join("index.json");
    let o = sod(&["rag-index", docs.to_str().unwrap(), "--out", index.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let q = sod(&["rag-query", "--index", index.to_str().unwrap(), "--query", "hide rows with a filter", "-k", "1"]);
    assert_eq!(code(&q), 0);
    let v: serde_json::Value = serde_json::from_slice(&q.stdout).unwrap();
    assert_eq!(v[0]["source_doc"], "filters.md");
    let p = sod(&["rag-query", "--index", index.to_str().unwrap(), "--query", "hide rows", "--prompt"]);
    assert!(stdout(&p).contains("Filters hide rows"));
}

#[test]
fn pipeline_reports_mismatch() {
    let ok = sod(&["pipeline", "fixtures/copy_hello.bas", "--dialect", "vba"]);
    assert_eq!(code(&ok), 0);
    let v: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(v["steps"].as_array().unwrap().len(), 2);
    let bad = sod(&[
        "pipeline",
        "fixtures/copy_hello.gs",
        "--dialect",
        "gas",
        "--expected",
        "data/workbooks/weekly-sales.json",
    ]);
    assert_eq!(code(&bad), 1);
}
