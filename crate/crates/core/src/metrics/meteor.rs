use porter_stemmer::stem;
use serde::{Deserialize, Serialize};

use super::{MetricError, TokenSeq};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeteorParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for MeteorParams {
    fn default() -> Self {
        MeteorParams {
            alpha: 0.9,
            beta: 3.0,
            gamma: 0.5,
        }
    }
}

/// METEOR with exact and stem matching stages and default parameters.
pub fn meteor(candidate: &TokenSeq, reference: &TokenSeq) -> Result<f64, MetricError> {
    meteor_with(candidate, reference, MeteorParams::default())
}

/// Alignment is greedy: each candidate token, left to right, takes the
/// leftmost unused reference token it matches. Exact matches are placed
/// first; remaining tokens are then matched on Porter stems.
pub fn meteor_with(candidate: &TokenSeq, reference: &TokenSeq, params: MeteorParams) -> Result<f64, MetricError> {
    if candidate.is_empty() {
        return Err(MetricError::EmptyInput("candidate"));
    }
    if reference.is_empty() {
        return Err(MetricError::EmptyInput("reference"));
    }
    let mut link: Vec<Option<usize>> = vec![None; candidate.len()];
    let mut used = vec![false; reference.len()];
    align(candidate, reference, &mut link, &mut used, |a, b| a == b);
    let cand_stems: Vec<String> = candidate.iter().map(|t| stem(t)).collect();
    let ref_stems: Vec<String> = reference.iter().map(|t| stem(t)).collect();
    align(&cand_stems, &ref_stems, &mut link, &mut used, |a, b| a == b);

    let pairs: Vec<(usize, usize)> = link.iter().enumerate().filter_map(|(i, r)| r.map(|r| (i, r))).collect();
    let m = pairs.len();
    if m == 0 {
        return Ok(0.0);
    }
    let chunks = 1 + pairs.windows(2).filter(|w| w[1].0 != w[0].0 + 1 || w[1].1 != w[0].1 + 1).count();
    let p = m as f64 / candidate.len() as f64;
    let r = m as f64 / reference.len() as f64;
    let f_mean = p * r / (params.alpha * p + (1.0 - params.alpha) * r);
    let penalty = params.gamma * (chunks as f64 / m as f64).powf(params.beta);
    Ok(f_mean * (1.0 - penalty))
}

fn align(
    cand: &[String],
    reference: &[String],
    link: &mut [Option<usize>],
    used: &mut [bool],
    same: impl Fn(&str, &str) -> bool,
) {
    for (i, c) in cand.iter().enumerate() {
        if link[i].is_some() {
            continue;
        }
        if let Some(j) = (0..reference.len()).find(|&j| !used[j] && same(c, &reference[j])) {
            link[i] = Some(j);
            used[j] = true;
        }
    }
}
