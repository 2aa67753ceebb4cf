use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::RetrievalError;

/// Lowercase alphanumeric runs; `_` counts as alphanumeric.
pub fn terms(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// TF-IDF model with smoothed idf `ln((1 + N) / (1 + df)) + 1` and
/// L2-normalized vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfIdf {
    /// Vocabulary in index order (sorted).
    pub vocabulary: Vec<String>,
    pub idf: Vec<f64>,
    #[serde(skip)]
    lookup: BTreeMap<String, usize>,
}

impl TfIdf {
    pub fn fit<S: AsRef<str>>(texts: &[S]) -> Result<Self, RetrievalError> {
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for t in texts {
            let mut seen = terms(t.as_ref());
            seen.sort();
            seen.dedup();
            for term in seen {
                *df.entry(term).or_insert(0) += 1;
            }
        }
        if df.is_empty() {
            return Err(RetrievalError::Fit);
        }
        let n = texts.len() as f64;
        let idf = df.values().map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0).collect();
        Ok(Self::from_parts(df.into_keys().collect(), idf))
    }

    pub fn from_parts(vocabulary: Vec<String>, idf: Vec<f64>) -> Self {
        let lookup = vocabulary.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        TfIdf { vocabulary, idf, lookup }
    }

    pub(crate) fn reindex(&mut self) {
        self.lookup = self.vocabulary.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    }

    pub fn dimension(&self) -> usize {
        self.vocabulary.len()
    }

    /// Vector for `text`. Returns the zero vector (and logs a warning) when
    /// no term is in the vocabulary.
    pub fn transform(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dimension()];
        for t in terms(text) {
            if let Some(&i) = self.lookup.get(&t) {
                v[i] += 1.0;
            }
        }
        for (x, idf) in v.iter_mut().zip(&self.idf) {
            *x *= idf;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            log::warn!("no known terms in text; using a zero vector");
            return v;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_idf() {
        let m = TfIdf::fit(&["a b", "a c"]).unwrap();
        assert_eq!(m.vocabulary, ["a", "b", "c"]);
        assert!((m.idf[0] - 1.0).abs() < 1e-12);
        assert!((m.idf[1] - ((3.0f64 / 2.0).ln() + 1.0)).abs() < 1e-12);
        let v = m.transform("A, b!");
        let (x, y) = (1.0, (1.5f64).ln() + 1.0);
        let n = (x * x + y * y).sqrt();
        assert!((v[0] - x / n).abs() < 1e-12 && (v[1] - y / n).abs() < 1e-12 && v[2] == 0.0);
        assert!(m.transform("zzz").iter().all(|&x| x == 0.0));
        assert!(matches!(TfIdf::fit(&["", "..."]), Err(RetrievalError::Fit)));
    }
}
