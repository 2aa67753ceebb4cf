use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use super::{io_err, HarnessError, RunConfig};
use crate::dataset::{split_shots, Corpus, TaskInstance};
use crate::metrics::{score_instance, MetricScore};
use crate::prompting::{build_prompt, doc_snippets_for, summarize, PromptSettings, Summarizer};
use crate::stats::{build_report, margin_of_error, mean, ModelSamples, Sample, StatsReport, Z_95};
use crate::workbook::{execute, load_workbook};
use crate::xwapi::{parse_script, ActionCatalog};

/// One backend's result on one instance: either a score or an error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRecord {
    pub id: String,
    pub backend: String,
    pub candidate_steps: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<MetricScore>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Wall time; kept out of the record files so they stay reproducible.
    #[serde(skip)]
    pub latency: Duration,
}

fn evaluate_one(
    backend: &dyn Summarizer,
    target: &TaskInstance,
    exemplars: &[TaskInstance],
    settings: &PromptSettings,
    catalog: &ActionCatalog,
) -> EvalRecord {
    let started = Instant::now();
    let mut record = EvalRecord {
        id: target.id.clone(),
        backend: backend.name().to_string(),
        candidate_steps: Vec::new(),
        score: None,
        error: None,
        latency: Duration::ZERO,
    };
    let docs = doc_snippets_for(&target.code, catalog);
    let outcome = build_prompt(target, exemplars, &docs, settings)
        .map_err(|e| format!("prompt: {e}"))
        .and_then(|bundle| summarize(&bundle, backend).map_err(|e| format!("summarize: {e}")))
        .and_then(|summary| {
            record.candidate_steps = summary.steps;
            score_instance(&record.candidate_steps, &target.reference_steps).map_err(|e| format!("score: {e}"))
        });
    match outcome {
        Ok(score) => record.score = Some(score),
        Err(e) => record.error = Some(e),
    }
    record.latency = started.elapsed();
    record
}

/// Evaluate `targets` on a bounded worker pool. Records come back sorted by id.
pub fn run_instances(
    backend: &dyn Summarizer,
    exemplars: &[TaskInstance],
    targets: &[TaskInstance],
    settings: &PromptSettings,
    workers: usize,
) -> Result<Vec<EvalRecord>, HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Config(format!("worker pool: {e}")))?;
    let catalog = ActionCatalog::seed();
    let mut records: Vec<EvalRecord> = pool.install(|| {
        targets
            .par_iter()
            .map(|t| evaluate_one(backend, t, exemplars, settings, &catalog))
            .collect()
    });
    records.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(records)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutcome {
    /// Grouped by backend in config order, each group sorted by id.
    pub records: Vec<EvalRecord>,
    pub report: StatsReport,
    pub evaluated: usize,
    pub held_out: usize,
}

impl EvalOutcome {
    pub fn error_count(&self) -> usize {
        self.records.iter().filter(|r| r.error.is_some()).count()
    }
}

/// Evaluate every configured backend on the same instances: the corpus
/// minus the exemplars of the largest shot count.
pub fn evaluate(config: &RunConfig, corpus: &Corpus, allow_remote: bool) -> Result<EvalOutcome, HarnessError> {
    config.check()?;
    config.require_hermetic(allow_remote)?;
    let (held, evaluation) = split_shots(corpus, config.max_shots(), config.seed)?;

    let mut records = Vec::new();
    let mut groups: Vec<(String, Vec<EvalRecord>)> = Vec::new();
    for bc in &config.backends {
        let backend = bc.build()?;
        let (exemplars, _) = split_shots(corpus, config.shots_for(bc), config.seed)?;
        let recs = run_instances(backend.as_ref(), &exemplars, &evaluation, &config.settings_for(bc), config.workers)?;
        groups.push((bc.label().to_string(), recs));
    }

    let mut notes = vec![format!(
        "{} instance(s) evaluated per backend; {} of {} held out as exemplars.",
        evaluation.len(),
        held.len(),
        corpus.len()
    )];
    for (name, recs) in &groups {
        let failed = recs.iter().filter(|r| r.error.is_some()).count();
        notes.push(format!("{name}: {} scored, {failed} failed.", recs.len() - failed));
    }
    // Keep samples paired: only instances every backend scored.
    let common: BTreeSet<&str> = evaluation
        .iter()
        .map(|t| t.id.as_str())
        .filter(|id| groups.iter().all(|(_, recs)| recs.iter().any(|r| r.id == *id && r.score.is_some())))
        .collect();
    let dropped = evaluation.len() - common.len();
    if dropped > 0 && groups.len() > 1 {
        notes.push(format!("{dropped} instance(s) left out of the tables because a backend failed on them."));
    }

    let report = if common.len() < 2 {
        notes.push("Too few scored instances for mean and MOE tables.".into());
        build_report(&[], notes)?
    } else {
        let samples: Vec<ModelSamples> = groups
            .iter()
            .map(|(name, recs)| {
                let scored: Vec<&MetricScore> = recs
                    .iter()
                    .filter(|r| common.contains(r.id.as_str()))
                    .filter_map(|r| r.score.as_ref())
                    .collect();
                ModelSamples {
                    model: name.clone(),
                    metrics: MetricScore::NAMES
                        .iter()
                        .map(|m| (m.to_string(), scored.iter().map(|s| s.get(m).expect("known metric")).collect()))
                        .collect(),
                }
            })
            .collect();
        build_report(&samples, notes)?
    };
    for (_, recs) in groups {
        records.extend(recs);
    }
    Ok(EvalOutcome {
        records,
        report,
        evaluated: evaluation.len(),
        held_out: held.len(),
    })
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

/// `backend,id,bleu,gleu,rouge_l,meteor,error`; scores blank on error.
pub fn records_to_csv(records: &[EvalRecord]) -> String {
    csv_string(
        &["backend", "id", "bleu", "gleu", "rouge_l", "meteor", "error"],
        records.iter().map(|r| {
            let mut row = vec![r.backend.clone(), r.id.clone()];
            match &r.score {
                Some(s) => row.extend(s.values().iter().map(|v| format!("{v:.6}"))),
                None => row.extend(std::iter::repeat_n(String::new(), 4)),
            }
            row.push(r.error.clone().unwrap_or_default());
            row
        }),
    )
}

/// Write records, latencies and the report under `dir`.
pub fn write_evaluation(dir: &Path, outcome: &EvalOutcome) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut jsonl = String::new();
    for r in &outcome.records {
        jsonl.push_str(&serde_json::to_string(r).expect("records are serializable"));
        jsonl.push('\n');
    }
    let latency = csv_string(
        &["backend", "id", "latency_ms"],
        outcome
            .records
            .iter()
            .map(|r| vec![r.backend.clone(), r.id.clone(), format!("{:.3}", r.latency.as_secs_f64() * 1000.0)]),
    );
    let files = [
        ("records.csv", records_to_csv(&outcome.records)),
        ("records.jsonl", jsonl),
        ("latency.csv", latency),
        ("report.md", outcome.report.to_markdown()),
        ("report.json", outcome.report.to_json() + "\n"),
    ];
    for (name, text) in files {
        let path = dir.join(name);
        fs::write(&path, text).map_err(io_err(&path))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub shots: usize,
    pub metric: String,
    /// Scored instances behind the mean.
    pub n: usize,
    pub mean: f64,
    pub moe: f64,
}

/// Score the sweep subset once per shot count, with exemplars drawn as
/// prefixes of the seeded exemplar pool. Uses the backend named `backend`,
/// or the first configured one.
pub fn sweep(
    config: &RunConfig,
    corpus: &Corpus,
    backend: Option<&str>,
    shots: &[usize],
    subset_size: usize,
    allow_remote: bool,
) -> Result<Vec<SweepRow>, HarnessError> {
    config.check()?;
    let bc = match backend {
        Some(name) => config
            .backends
            .iter()
            .find(|b| b.label() == name)
            .ok_or_else(|| HarnessError::Config(format!("no backend named `{name}`")))?,
        None => &config.backends[0],
    };
    if bc.is_remote() && !allow_remote {
        return Err(HarnessError::Config(format!(
            "backend `{}` is remote; pass --allow-remote to use it",
            bc.label()
        )));
    }
    let subset: Vec<TaskInstance> = corpus.sweep_instances().into_iter().take(subset_size).cloned().collect();
    if subset.len() < subset_size {
        return Err(HarnessError::Range(format!(
            "the corpus designates {} sweep instance(s), {subset_size} requested",
            subset.len()
        )));
    }
    let pool = corpus.exemplar_pool(config.seed);
    if let Some(&k) = shots.iter().find(|&&k| k + subset_size > corpus.len() || k > pool.len()) {
        return Err(HarnessError::Range(format!(
            "{k} shot(s) plus {subset_size} test instance(s) do not fit a corpus of {} ({} exemplar candidates)",
            corpus.len(),
            pool.len()
        )));
    }
    let summarizer = bc.build()?;
    let settings = config.settings_for(bc);
    let mut rows = Vec::new();
    for &k in shots {
        let exemplars: Vec<TaskInstance> = pool[..k].iter().map(|&t| t.clone()).collect();
        let records = run_instances(summarizer.as_ref(), &exemplars, &subset, &settings, config.workers)?;
        let scored: Vec<&MetricScore> = records.iter().filter_map(|r| r.score.as_ref()).collect();
        for m in MetricScore::NAMES {
            let values: Vec<f64> = scored.iter().map(|s| s.get(m).expect("known metric")).collect();
            let sample = Sample::new(m, values.clone());
            rows.push(SweepRow {
                shots: k,
                metric: m.to_string(),
                n: values.len(),
                mean: mean(&values).unwrap_or(f64::NAN),
                moe: margin_of_error(&sample, Z_95).unwrap_or(f64::NAN),
            });
        }
    }
    Ok(rows)
}

/// `shots,metric,mean,moe` with six decimals.
pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    csv_string(
        &["shots", "metric", "mean", "moe"],
        rows.iter().map(|r| {
            vec![
                r.shots.to_string(),
                r.metric.clone(),
                format!("{:.6}", r.mean),
                format!("{:.6}", r.moe),
            ]
        }),
    )
}

/// Run each instance's code on its seed workbook from `dir`; returns one
/// message per failure.
pub fn check_seed_execution(corpus: &Corpus, dir: &Path) -> Vec<String> {
    let catalog = ActionCatalog::seed();
    let mut problems = Vec::new();
    for inst in &corpus.instances {
        let Some(file) = &inst.seed_workbook else { continue };
        let result = load_workbook(dir.join(file))
            .map_err(|e| e.to_string())
            .and_then(|book| {
                let script = parse_script(&inst.code, &catalog).map_err(|e| e.to_string())?;
                execute(&script, book).map_err(|e| e.to_string())
            });
        if let Err(e) = result {
            problems.push(format!("{}: {e}", inst.id));
        }
    }
    problems
}

