//! Text-similarity metrics for generated step lists, plus Exec@1/Pass@1 rates.

mod meteor;
mod ngram;
mod rouge;
mod tokenize;

use std::ops::Deref;

use serde::{Deserialize, Serialize};

pub use meteor::{meteor, meteor_with, MeteorParams};
pub use ngram::{bleu, gleu, DEFAULT_MAX_N};
pub use rouge::{lcs_len, rouge_l};
pub use tokenize::tokenize;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("rate total is zero")]
    DivisionByZero,
    #[error("invalid rate counts: need pass ({pass}) <= exec ({exec}) <= total ({total})")]
    InvalidRate { total: u64, exec: u64, pass: u64 },
}

/// Lowercase word tokens produced by [`tokenize`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct TokenSeq {
    tokens: Vec<String>,
}

impl TokenSeq {
    /// Wrap pre-split tokens. Empty strings are dropped.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        TokenSeq {
            tokens: tokens.into_iter().map(Into::into).filter(|t: &String| !t.is_empty()).collect(),
        }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

impl Deref for TokenSeq {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.tokens
    }
}

impl From<&str> for TokenSeq {
    fn from(text: &str) -> Self {
        tokenize(text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricScore {
    pub bleu: f64,
    pub gleu: f64,
    pub rouge_l: f64,
    pub meteor: f64,
}

impl MetricScore {
    pub const NAMES: [&'static str; 4] = ["bleu", "gleu", "rouge_l", "meteor"];

    pub fn get(&self, metric: &str) -> Option<f64> {
        match metric {
            "bleu" => Some(self.bleu),
            "gleu" => Some(self.gleu),
            "rouge_l" => Some(self.rouge_l),
            "meteor" => Some(self.meteor),
            _ => None,
        }
    }

    pub fn values(&self) -> [f64; 4] {
        [self.bleu, self.gleu, self.rouge_l, self.meteor]
    }
}

/// Score one candidate step list against its reference. Steps are joined
/// with single spaces on each side before tokenizing.
pub fn score_instance<S: AsRef<str>, R: AsRef<str>>(candidate: &[S], reference: &[R]) -> Result<MetricScore, MetricError> {
    let join = |steps: &[&str]| steps.join(" ");
    let c = tokenize(&join(&candidate.iter().map(AsRef::as_ref).collect::<Vec<_>>()));
    let r = tokenize(&join(&reference.iter().map(AsRef::as_ref).collect::<Vec<_>>()));
    if c.is_empty() {
        return Err(MetricError::EmptyInput("candidate"));
    }
    if r.is_empty() {
        return Err(MetricError::EmptyInput("reference"));
    }
    let refs = std::slice::from_ref(&r);
    Ok(MetricScore {
        bleu: bleu(&c, refs, DEFAULT_MAX_N)?,
        gleu: gleu(&c, refs, DEFAULT_MAX_N)?,
        rouge_l: rouge_l(&c, &r)?,
        meteor: meteor(&c, &r)?,
    })
}

/// Execution and pass counts for a code-generation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RateScore {
    total: u64,
    exec_count: u64,
    pass_count: u64,
}

impl RateScore {
    pub fn new(total: u64, exec_count: u64, pass_count: u64) -> Result<Self, MetricError> {
        if pass_count > exec_count || exec_count > total {
            return Err(MetricError::InvalidRate {
                total,
                exec: exec_count,
                pass: pass_count,
            });
        }
        Ok(RateScore {
            total,
            exec_count,
            pass_count,
        })
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn exec_count(&self) -> u64 {
        self.exec_count
    }

    pub fn pass_count(&self) -> u64 {
        self.pass_count
    }
}

/// `(exec@1, pass@1)` as fractions of the total.
pub fn rates(score: &RateScore) -> Result<(f64, f64), MetricError> {
    if score.total == 0 {
        return Err(MetricError::DivisionByZero);
    }
    let total = score.total as f64;
    Ok((score.exec_count as f64 / total, score.pass_count as f64 / total))
}

/// Per-instance scores as CSV with header `id,bleu,gleu,rouge_l,meteor`.
pub fn scores_to_csv<'a, I>(rows: I) -> String
where
    I: IntoIterator<Item = (&'a str, &'a MetricScore)>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "bleu", "gleu", "rouge_l", "meteor"]).expect("in-memory write");
    for (id, s) in rows {
        let mut rec = vec![id.to_string()];
        rec.extend(s.values().iter().map(|v| format!("{v:.6}")));
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}
