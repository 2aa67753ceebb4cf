//! Means, margins of error, Welch t statistics and normal p-values, and the
//! report that combines them.

use std::fmt::Write as _;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use statrs::function::erf::erfc;

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959964;

/// Significance threshold for the pairwise table.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("empty sample")]
    EmptyInput,
    #[error("sample `{label}` has {n} value(s); at least 2 are needed")]
    InsufficientData { label: String, n: usize },
    #[error("both samples have zero variance")]
    DegenerateVariance,
    #[error("shape mismatch: {0}")]
    ShapeError(String),
}

/// A labelled list of observations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub label: String,
    pub values: Vec<f64>,
}

impl Sample {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Self {
        Sample {
            label: label.into(),
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn mean(values: &[f64]) -> Result<f64, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    // Shifting by the first value keeps constant samples exact.
    let shift = values[0];
    Ok(shift + values.iter().map(|v| v - shift).sum::<f64>() / values.len() as f64)
}

fn need_two(sample: &Sample) -> Result<(), StatsError> {
    if sample.len() < 2 {
        return Err(StatsError::InsufficientData {
            label: sample.label.clone(),
            n: sample.len(),
        });
    }
    Ok(())
}

/// Sample variance with the `N - 1` denominator.
pub fn variance(sample: &Sample) -> Result<f64, StatsError> {
    need_two(sample)?;
    let m = mean(&sample.values)?;
    let ss: f64 = sample.values.iter().map(|v| (v - m) * (v - m)).sum();
    Ok(ss / (sample.len() - 1) as f64)
}

pub fn std_dev(sample: &Sample) -> Result<f64, StatsError> {
    variance(sample).map(f64::sqrt)
}

/// `z * s / sqrt(N)`.
pub fn margin_of_error(sample: &Sample, z: f64) -> Result<f64, StatsError> {
    Ok(z * std_dev(sample)? / (sample.len() as f64).sqrt())
}

/// Welch two-sample t statistic.
pub fn t_statistic(a: &Sample, b: &Sample) -> Result<f64, StatsError> {
    let (va, vb) = (variance(a)?, variance(b)?);
    if va == 0.0 && vb == 0.0 {
        return Err(StatsError::DegenerateVariance);
    }
    let se = (va / a.len() as f64 + vb / b.len() as f64).sqrt();
    Ok((mean(&a.values)? - mean(&b.values)?) / se)
}

/// Two-sided p-value under the standard normal: `2 * (1 - Phi(|t|))`.
pub fn p_value(t: f64) -> f64 {
    erfc(t.abs() / std::f64::consts::SQRT_2)
}

/// Per-instance metric samples for one model, in display order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSamples {
    pub model: String,
    pub metrics: Vec<(String, Vec<f64>)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanMoe {
    pub mean: f64,
    pub moe: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelRow {
    pub name: String,
    pub n: usize,
    #[serde(serialize_with = "ordered_map")]
    pub metrics: Vec<(String, MeanMoe)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairRow {
    pub a: String,
    pub b: String,
    pub metric: String,
    /// `None` when both samples have zero variance.
    pub t: Option<f64>,
    pub p: Option<f64>,
    pub significant: bool,
    /// The two 95% intervals intersect.
    pub ci_overlap: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    /// Header lines shown above the tables (exclusions and the like).
    pub notes: Vec<String>,
    pub models: Vec<ModelRow>,
    pub pairs: Vec<PairRow>,
}

fn ordered_map<S: Serializer>(entries: &[(String, MeanMoe)], s: S) -> Result<S::Ok, S::Error> {
    let mut map = s.serialize_map(Some(entries.len()))?;
    for (k, v) in entries {
        map.serialize_entry(k, v)?;
    }
    map.end()
}

/// Build mean ± MOE rows for every model and t/p rows for every model pair
/// and metric. All models must report the same metrics, and every sample
/// of a metric must have the same length.
pub fn build_report(samples: &[ModelSamples], notes: Vec<String>) -> Result<StatsReport, StatsError> {
    let Some(first) = samples.first() else {
        return Ok(StatsReport {
            notes,
            models: Vec::new(),
            pairs: Vec::new(),
        });
    };
    let metric_names: Vec<&str> = first.metrics.iter().map(|(m, _)| m.as_str()).collect();
    for ms in samples {
        let names: Vec<&str> = ms.metrics.iter().map(|(m, _)| m.as_str()).collect();
        if names != metric_names {
            return Err(StatsError::ShapeError(format!(
                "model `{}` reports metrics {names:?}, expected {metric_names:?}",
                ms.model
            )));
        }
    }
    for (k, name) in metric_names.iter().enumerate() {
        let n = first.metrics[k].1.len();
        for ms in samples {
            let got = ms.metrics[k].1.len();
            if got != n {
                return Err(StatsError::ShapeError(format!(
                    "metric `{name}` has {got} values for `{}` but {n} for `{}`",
                    ms.model, first.model
                )));
            }
        }
    }

    let as_sample = |ms: &ModelSamples, k: usize| Sample::new(format!("{}/{}", ms.model, ms.metrics[k].0), ms.metrics[k].1.clone());

    let mut models = Vec::new();
    for ms in samples {
        let mut metrics = Vec::new();
        for (k, (name, values)) in ms.metrics.iter().enumerate() {
            let s = as_sample(ms, k);
            metrics.push((
                name.clone(),
                MeanMoe {
                    mean: mean(values)?,
                    moe: margin_of_error(&s, Z_95)?,
                },
            ));
        }
        models.push(ModelRow {
            name: ms.model.clone(),
            n: ms.metrics.first().map_or(0, |(_, v)| v.len()),
            metrics,
        });
    }

    let mut pairs = Vec::new();
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            for (k, name) in metric_names.iter().enumerate() {
                let (a, b) = (as_sample(&samples[i], k), as_sample(&samples[j], k));
                let t = match t_statistic(&a, &b) {
                    Ok(t) => Some(t),
                    Err(StatsError::DegenerateVariance) => None,
                    Err(e) => return Err(e),
                };
                let p = t.map(p_value);
                let (ra, rb) = (models[i].metrics[k].1, models[j].metrics[k].1);
                pairs.push(PairRow {
                    a: samples[i].model.clone(),
                    b: samples[j].model.clone(),
                    metric: name.to_string(),
                    t,
                    p,
                    significant: p.is_some_and(|p| p < ALPHA),
                    ci_overlap: (ra.mean - rb.mean).abs() < ra.moe + rb.moe,
                });
            }
        }
    }
    Ok(StatsReport { notes, models, pairs })
}

/// Display name for a metric key.
pub fn metric_title(key: &str) -> &str {
    match key {
        "bleu" => "BLEU",
        "gleu" => "GLEU",
        "rouge_l" => "ROUGE-L",
        "meteor" => "METEOR",
        other => other,
    }
}

/// Fixed three-decimal rendering without negative zero.
fn fmt3(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

impl StatsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serializable")
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        for note in &self.notes {
            let _ = writeln!(out, "> {note}");
        }
        if !self.notes.is_empty() {
            out.push('\n');
        }
        let metrics: Vec<&str> = self
            .models
            .first()
            .map(|m| m.metrics.iter().map(|(k, _)| k.as_str()).collect())
            .unwrap_or_default();

        out.push_str("## Mean scores (± MOE, 95% CI)\n\n| Model | N |");
        for m in &metrics {
            let _ = write!(out, " {} |", metric_title(m));
        }
        out.push_str("\n|---|---:|");
        out.push_str(&"---:|".repeat(metrics.len()));
        out.push('\n');
        for row in &self.models {
            let _ = write!(out, "| {} | {} |", row.name, row.n);
            for (_, mm) in &row.metrics {
                let _ = write!(out, " {} ± {} |", fmt3(mm.mean), fmt3(mm.moe));
            }
            out.push('\n');
        }

        out.push_str("\n## Pairwise comparisons\n\n");
        if self.pairs.is_empty() {
            out.push_str("No model pairs.\n");
        } else {
            out.push_str("| Model A | Model B | Metric | t | p | p < 0.05 | CIs overlap |\n|---|---|---|---:|---:|---|---|\n");
            for p in &self.pairs {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {} | {} | {} |",
                    p.a,
                    p.b,
                    metric_title(&p.metric),
                    p.t.map_or("n/a".into(), fmt3),
                    p.p.map_or("n/a".into(), fmt3),
                    if p.significant { "yes" } else { "no" },
                    if p.ci_overlap { "yes" } else { "no" },
                );
            }
        }
        let _ = write!(
            out,
            "\nMOE = {Z_95} · s / √N with the sample standard deviation s (N − 1 denominator). \
             t is Welch's two-sample statistic; p = 2(1 − Φ(|t|)) uses the standard normal \
             distribution rather than Student's t.\n"
        );
        out
    }
}
