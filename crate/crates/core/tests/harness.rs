//! End-to-end evaluation, sweep and pipeline runs on the shipped corpus.

use std::net::TcpListener;
use std::path::PathBuf;

use sod_core::dataset::load_corpus;
use sod_core::harness::{evaluate, records_to_csv, sweep, sweep_to_csv, write_evaluation, HarnessError, RunConfig};
use sod_core::metrics::MetricScore;
use sod_core::prompting::{BackendConfig, BackendKind};

fn corpus_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/sodbench.jsonl")
}

#[test]
fn baseline_evaluation_is_complete() {
    let config = RunConfig::baseline(corpus_path());
    let corpus = load_corpus(&config.corpus).unwrap();
    let out = evaluate(&config, &corpus, false).unwrap();
    assert_eq!(out.records.len(), 107);
    assert_eq!(out.error_count(), 0);
    assert_eq!(out.report.models.len(), 1);
    assert_eq!(out.report.models[0].n, 107);
    let md = out.report.to_markdown();
    assert!(md.contains("107 instance(s) evaluated"), "{md}");

    let dir = tempfile::tempdir().unwrap();
    write_evaluation(dir.path(), &out).unwrap();
    for f in ["records.csv", "records.jsonl", "latency.csv", "report.md", "report.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn identical_backends_have_zero_t() {
    let mut config = RunConfig::baseline(corpus_path());
    config.backends.push(BackendConfig::template("template-copy"));
    let corpus = load_corpus(&config.corpus).unwrap();
    let out = evaluate(&config, &corpus, false).unwrap();
    assert_eq!(out.report.pairs.len(), 4);
    for p in &out.report.pairs {
        assert_eq!(p.t, Some(0.0));
        assert_eq!(p.p, Some(1.0));
    }
}

#[test]
fn unreachable_backend_is_contained() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    std::env::set_var("SOD_HARNESS_TEST_KEY", "k");
    let mut config = RunConfig::baseline(corpus_path());
    config.backends = vec![BackendConfig {
        kind: BackendKind::RemoteChat,
        name: Some("down".into()),
        endpoint: Some(format!("http://127.0.0.1:{port}/v1/chat/completions")),
        model_name: "m".into(),
        auth_env: Some("SOD_HARNESS_TEST_KEY".into()),
        context_budget: None,
        shots: None,
        retries: 0,
    }];
    let corpus = load_corpus(&config.corpus).unwrap();
    assert!(matches!(evaluate(&config, &corpus, false), Err(HarnessError::Config(_))));
    let out = evaluate(&config, &corpus, true).unwrap();
    assert_eq!(out.error_count(), 107);
    assert!(out.report.models.is_empty());
    assert!(out.report.notes.iter().any(|n| n == "down: 0 scored, 107 failed."));
}

#[test]
fn sweep_at_four_matches_evaluation_on_the_subset() {
    let config = RunConfig::baseline(corpus_path());
    let corpus = load_corpus(&config.corpus).unwrap();
    let rows = sweep(&config, &corpus, None, &[4], 20, false).unwrap();
    let out = evaluate(&config, &corpus, false).unwrap();
    let subset = &corpus.manifest.sweep_subset;
    let scored: Vec<&MetricScore> = out
        .records
        .iter()
        .filter(|r| subset.contains(&r.id))
        .map(|r| r.score.as_ref().unwrap())
        .collect();
    assert_eq!(scored.len(), 20);
    for row in &rows {
        let values: Vec<f64> = scored.iter().map(|s| s.get(&row.metric).unwrap()).collect();
        let mean = sod_core::stats::mean(&values).unwrap();
        assert!((row.mean - mean).abs() < 1e-12, "{}", row.metric);
    }
    assert!(sweep(&config, &corpus, None, &[], 20, false).unwrap().is_empty());
    assert_eq!(sweep_to_csv(&[]), "shots,metric,mean,moe\n");
    assert!(matches!(sweep(&config, &corpus, None, &[92], 20, false), Err(HarnessError::Range(_))));
    assert!(matches!(sweep(&config, &corpus, None, &[1], 21, false), Err(HarnessError::Range(_))));
}

#[test]
fn exemplar_baseline_varies_with_shots() {
    let mut config = RunConfig::baseline(corpus_path());
    config.backends = vec![BackendConfig {
        kind: BackendKind::ExemplarBaseline,
        ..BackendConfig::template("exemplar")
    }];
    let corpus = load_corpus(&config.corpus).unwrap();
    let rows = sweep(&config, &corpus, None, &[0, 19], 20, false).unwrap();
    let bleu: Vec<f64> = rows.iter().filter(|r| r.metric == "bleu").map(|r| r.mean).collect();
    assert_ne!(bleu[0], bleu[1]);
}

#[test]
fn records_csv_shape() {
    let config = RunConfig::baseline(corpus_path());
    let corpus = load_corpus(&config.corpus).unwrap();
    let out = evaluate(&config, &corpus, false).unwrap();
    let csv = records_to_csv(&out.records);
    assert!(csv.starts_with("backend,id,bleu,gleu,rouge_l,meteor,error\n"));
    assert_eq!(csv.lines().count(), 108);
}

