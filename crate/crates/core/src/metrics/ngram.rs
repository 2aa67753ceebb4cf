use std::collections::HashMap;

use super::{MetricError, TokenSeq};

pub const DEFAULT_MAX_N: usize = 4;

type Counts<'a> = HashMap<&'a [String], usize>;

fn ngram_counts(tokens: &[String], n: usize) -> Counts<'_> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

fn clipped_matches(cand: &Counts<'_>, reference: &Counts<'_>) -> usize {
    cand.iter().map(|(g, &c)| c.min(reference.get(g).copied().unwrap_or(0))).sum()
}

fn check(candidate: &TokenSeq, references: &[TokenSeq]) -> Result<(), MetricError> {
    if candidate.is_empty() {
        return Err(MetricError::EmptyInput("candidate"));
    }
    if references.is_empty() || references.iter().any(|r| r.is_empty()) {
        return Err(MetricError::EmptyInput("reference"));
    }
    Ok(())
}

/// Sentence BLEU with uniform weights over orders `1..=min(max_n, |c|)`.
///
/// Modified precision clips each candidate n-gram count by its maximum
/// count in any single reference. A zero precision is replaced by
/// `1 / (2 * candidate n-gram count)`. The brevity penalty uses the
/// reference length closest to the candidate length (shorter on ties).
pub fn bleu(candidate: &TokenSeq, references: &[TokenSeq], max_n: usize) -> Result<f64, MetricError> {
    check(candidate, references)?;
    assert!(max_n >= 1, "max_n must be at least 1");
    let orders = max_n.min(candidate.len());
    let mut log_sum = 0.0;
    for n in 1..=orders {
        let cand = ngram_counts(candidate, n);
        let mut max_ref: Counts<'_> = HashMap::new();
        for r in references {
            for (g, c) in ngram_counts(r, n) {
                let e = max_ref.entry(g).or_insert(0);
                *e = (*e).max(c);
            }
        }
        let total = candidate.len() + 1 - n;
        let matched = clipped_matches(&cand, &max_ref);
        let p = if matched == 0 {
            1.0 / (2.0 * total as f64)
        } else {
            matched as f64 / total as f64
        };
        log_sum += p.ln();
    }
    let c = candidate.len();
    let r = references
        .iter()
        .map(|r| r.len())
        .min_by_key(|&len| (len.abs_diff(c), len))
        .expect("references are non-empty");
    let bp = if c >= r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    Ok((bp * (log_sum / orders as f64).exp()).clamp(0.0, 1.0))
}

/// Sentence GLEU: pooled 1..=max_n gram matches, `min(precision, recall)`,
/// maximized over references.
pub fn gleu(candidate: &TokenSeq, references: &[TokenSeq], max_n: usize) -> Result<f64, MetricError> {
    check(candidate, references)?;
    assert!(max_n >= 1, "max_n must be at least 1");
    let cand: Vec<Counts<'_>> = (1..=max_n).map(|n| ngram_counts(candidate, n)).collect();
    let cand_total: usize = cand.iter().map(|c| c.values().sum::<usize>()).sum();
    let mut best: f64 = 0.0;
    for r in references {
        let mut matched = 0;
        let mut ref_total = 0;
        for (n, cand_n) in (1..=max_n).zip(&cand) {
            let ref_n = ngram_counts(r, n);
            ref_total += ref_n.values().sum::<usize>();
            matched += clipped_matches(cand_n, &ref_n);
        }
        let score = (matched as f64 / cand_total as f64).min(matched as f64 / ref_total as f64);
        best = best.max(score);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::tokenize;

    fn t(s: &str) -> TokenSeq {
        tokenize(s)
    }

    #[test]
    fn bleu_identity_and_disjoint() {
        let a = t("the cat sat on the mat");
        assert_eq!(bleu(&a, &[a.clone()], 4).unwrap(), 1.0);
        let d = bleu(&t("one two three four five six"), &[a.clone()], 4).unwrap();
        // Each order is floored at 1/(2 * count): counts 6, 5, 4, 3.
        let floor = (1.0f64 / 12.0 * 1.0 / 10.0 * 1.0 / 8.0 * 1.0 / 6.0).powf(0.25);
        assert!((d - floor).abs() < 1e-12);
    }

    #[test]
    fn bleu_worked_example() {
        // 5/6, 3/5, 1/4 and a floored 1/6 for the 4-grams; equal lengths.
        let got = bleu(&t("the cat sat on the mat"), &[t("the cat is on the mat")], 4).unwrap();
        let want = (5.0f64 / 6.0 * 3.0 / 5.0 * 1.0 / 4.0 * 1.0 / 6.0).powf(0.25);
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn bleu_brevity_penalty() {
        let got = bleu(&t("a b"), &[t("a b c d")], 4).unwrap();
        assert!((got - (1.0f64 - 2.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn gleu_cases() {
        let r = t("a b c");
        assert_eq!(gleu(&r, &[r.clone()], 4).unwrap(), 1.0);
        assert_eq!(gleu(&t("x y"), &[r.clone()], 4).unwrap(), 0.0);
        // Candidate contains the reference: recall 1, precision 6/10.
        let got = gleu(&t("a b c d"), &[r], 4).unwrap();
        assert!((got - 0.6).abs() < 1e-12);
    }

    #[test]
    fn empty_is_error() {
        let e = TokenSeq::default();
        assert!(bleu(&e, &[t("a")], 4).is_err());
        assert!(gleu(&t("a"), &[], 4).is_err());
        assert!(gleu(&t("a"), &[e], 4).is_err());
    }
}
