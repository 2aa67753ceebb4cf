//! Documentation chunking, embedding, top-k retrieval and RAG prompts.

mod remote;
mod tfidf;

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::metrics::RateScore;
use crate::prompting::{finish, ChatMessage, PromptBundle, PromptError, PromptSettings, Role};

pub use remote::RemoteEmbedder;
pub use tfidf::{terms, TfIdf};

pub const DEFAULT_MAX_CHARS: usize = 2000;
pub const DEFAULT_OVERLAP_CHARS: usize = 200;
pub const DEFAULT_TOP_K: usize = 10;
pub const INDEX_VERSION: u32 = 1;
pub const TFIDF_ID: &str = "tfidf";
pub const NO_CONTEXT: &str = "(no documentation retrieved)";

pub const RAG_INSTRUCTION: &str = "Write Excel JavaScript API code that completes the task.
Use the reference documentation when it is relevant.
Reply with code only.";

#[derive(Debug, thiserror::Error)]
pub enum RetrievalError {
    #[error("chunk size {max_chars} must exceed the overlap {overlap_chars}")]
    InvalidChunking { max_chars: usize, overlap_chars: usize },
    #[error("no terms to build a vocabulary from")]
    Fit,
    #[error("embedder: {0}")]
    Embedder(String),
    #[error("the index is empty")]
    EmptyIndex,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("vector has {found} dimensions, the index uses {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("chunk id `{0}` is already in the index")]
    DuplicateId(String),
    #[error("index was built with `{0}`; pass that embedder to embed new text")]
    NeedsEmbedder(String),
    #[error("unsupported index version {0}")]
    Version(u32),
    #[error("index file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("rates file: {0}")]
    Rates(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RetrievalError + '_ {
    move |source| RetrievalError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocChunk {
    pub id: String,
    pub source_doc: String,
    /// Character offset of `text` within the source document.
    pub start: usize,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector: Option<Vec<f64>>,
}

/// Paragraphs end after a run of two or more newlines; the run stays with
/// the paragraph. Returns char ranges.
fn paragraphs(chars: &[char]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let (mut start, mut i) = (0, 0);
    while i < chars.len() {
        if chars[i] == '\n' && chars.get(i + 1) == Some(&'\n') {
            let mut j = i;
            while j < chars.len() && chars[j] == '\n' {
                j += 1;
            }
            out.push((start, j));
            start = j;
            i = j;
        } else {
            i += 1;
        }
    }
    if start < chars.len() {
        out.push((start, chars.len()));
    }
    out
}

/// Pack whole paragraphs into chunks of at most `max_chars` characters.
/// A paragraph longer than that is cut into windows that overlap by
/// `overlap_chars`.
pub fn chunk_documents<N: AsRef<str>, T: AsRef<str>>(
    docs: &[(N, T)],
    max_chars: usize,
    overlap_chars: usize,
) -> Result<Vec<DocChunk>, RetrievalError> {
    if max_chars <= overlap_chars {
        return Err(RetrievalError::InvalidChunking { max_chars, overlap_chars });
    }
    let mut out = Vec::new();
    for (name, text) in docs {
        let chars: Vec<char> = text.as_ref().chars().collect();
        let mut spans = Vec::new();
        let (mut cur_start, mut cur_end) = (0, 0);
        for (s, e) in paragraphs(&chars) {
            if e - cur_start <= max_chars {
                cur_end = e;
                continue;
            }
            if cur_end > cur_start {
                spans.push((cur_start, cur_end));
            }
            let mut pos = s;
            while e - pos > max_chars {
                spans.push((pos, pos + max_chars));
                pos += max_chars - overlap_chars;
            }
            (cur_start, cur_end) = (pos, e);
        }
        if cur_end > cur_start {
            spans.push((cur_start, cur_end));
        }
        let name = name.as_ref();
        out.extend(spans.into_iter().enumerate().map(|(n, (s, e))| DocChunk {
            id: format!("{name}#{n:04}"),
            source_doc: name.to_string(),
            start: s,
            text: chars[s..e].iter().collect(),
            vector: None,
        }));
    }
    Ok(out)
}

/// Rebuild a document from its chunks (in order) by dropping overlaps.
pub fn reconstruct(chunks: &[DocChunk]) -> String {
    let mut out = String::new();
    let mut covered = 0usize;
    for c in chunks {
        let skip = covered.saturating_sub(c.start);
        out.extend(c.text.chars().skip(skip));
        covered = covered.max(c.start + c.text.chars().count());
    }
    out
}

pub trait Embedder {
    fn id(&self) -> String;
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, RetrievalError>;
}

impl Embedder for TfIdf {
    fn id(&self) -> String {
        TFIDF_ID.to_string()
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, RetrievalError> {
        Ok(texts.iter().map(|t| self.transform(t)).collect())
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkIndex {
    pub version: u32,
    pub embedder_id: String,
    pub dimension: usize,
    pub chunks: Vec<DocChunk>,
    /// Fitted model for TF-IDF indexes, used to embed queries.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tfidf: Option<TfIdf>,
}

impl ChunkIndex {
    /// Fit TF-IDF on the chunk texts and embed every chunk.
    pub fn tfidf(chunks: Vec<DocChunk>) -> Result<Self, RetrievalError> {
        let texts: Vec<&str> = chunks.iter().map(|c| c.text.as_str()).collect();
        let model = TfIdf::fit(&texts)?;
        let mut index = Self::with_embedder(chunks, &model)?;
        index.tfidf = Some(model);
        Ok(index)
    }

    pub fn with_embedder(chunks: Vec<DocChunk>, embedder: &dyn Embedder) -> Result<Self, RetrievalError> {
        let mut index = ChunkIndex {
            version: INDEX_VERSION,
            embedder_id: embedder.id(),
            dimension: 0,
            chunks: Vec::new(),
            tfidf: None,
        };
        let texts: Vec<String> = chunks.iter().map(|c| c.text.clone()).collect();
        let vectors = if texts.is_empty() { Vec::new() } else { embedder.embed(&texts)? };
        if let Some(v) = vectors.first() {
            index.dimension = v.len();
        }
        for (mut c, v) in chunks.into_iter().zip(vectors) {
            c.vector = Some(v);
            index.push(c)?;
        }
        Ok(index)
    }

    fn push(&mut self, chunk: DocChunk) -> Result<(), RetrievalError> {
        let found = chunk.vector.as_ref().map_or(0, Vec::len);
        if found != self.dimension {
            return Err(RetrievalError::Dimension {
                expected: self.dimension,
                found,
            });
        }
        if self.chunks.iter().any(|c| c.id == chunk.id) {
            return Err(RetrievalError::DuplicateId(chunk.id));
        }
        self.chunks.push(chunk);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    /// Embed `text` with the index's own TF-IDF model.
    pub fn query_vector(&self, text: &str) -> Result<Vec<f64>, RetrievalError> {
        match &self.tfidf {
            Some(m) => Ok(m.transform(text)),
            None => Err(RetrievalError::NeedsEmbedder(self.embedder_id.clone())),
        }
    }

    /// Add a chunk to a TF-IDF index without refitting; terms outside the
    /// fitted vocabulary are ignored.
    pub fn add(&mut self, mut chunk: DocChunk) -> Result<(), RetrievalError> {
        chunk.vector = Some(self.query_vector(&chunk.text)?);
        self.push(chunk)
    }

    pub fn add_with(&mut self, mut chunk: DocChunk, embedder: &dyn Embedder) -> Result<(), RetrievalError> {
        if embedder.id() != self.embedder_id {
            return Err(RetrievalError::NeedsEmbedder(self.embedder_id.clone()));
        }
        let v = embedder.embed(std::slice::from_ref(&chunk.text))?;
        chunk.vector = v.into_iter().next();
        self.push(chunk)
    }

    /// Top `k` chunks by cosine similarity to `query`.
    pub fn retrieve(&self, query: &str, k: usize) -> Result<Vec<(&DocChunk, f64)>, RetrievalError> {
        if self.is_empty() {
            return Err(RetrievalError::EmptyIndex);
        }
        self.retrieve_vector(&self.query_vector(query)?, k)
    }

    /// Top `k` by cosine, descending; ties go to the smaller chunk id.
    pub fn retrieve_vector(&self, query: &[f64], k: usize) -> Result<Vec<(&DocChunk, f64)>, RetrievalError> {
        if self.is_empty() {
            return Err(RetrievalError::EmptyIndex);
        }
        if k == 0 {
            return Err(RetrievalError::InvalidK);
        }
        if query.len() != self.dimension {
            return Err(RetrievalError::Dimension {
                expected: self.dimension,
                found: query.len(),
            });
        }
        let mut scored: Vec<(&DocChunk, f64)> = self
            .chunks
            .iter()
            .map(|c| (c, cosine(query, c.vector.as_deref().unwrap_or_default())))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.id.cmp(&b.0.id)));
        scored.truncate(k);
        Ok(scored)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("index is serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, RetrievalError> {
        let mut index: ChunkIndex = serde_json::from_str(text)?;
        if index.version != INDEX_VERSION {
            return Err(RetrievalError::Version(index.version));
        }
        if let Some(m) = &mut index.tfidf {
            m.reindex();
        }
        let chunks = std::mem::take(&mut index.chunks);
        let mut seen = HashSet::new();
        for c in chunks {
            if !seen.insert(c.id.clone()) {
                return Err(RetrievalError::DuplicateId(c.id));
            }
            index.push(c)?;
        }
        Ok(index)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RetrievalError> {
        let path = path.as_ref();
        fs::write(path, self.to_json() + "\n").map_err(io_err(path))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RetrievalError> {
        let path = path.as_ref();
        Self::from_json(&fs::read_to_string(path).map_err(io_err(path))?)
    }
}

/// Context block listing retrieved chunks, or [`NO_CONTEXT`].
pub fn context_block(retrieved: &[DocChunk]) -> String {
    if retrieved.is_empty() {
        return NO_CONTEXT.to_string();
    }
    retrieved
        .iter()
        .enumerate()
        .map(|(i, c)| format!("[{}] {}\n{}", i + 1, c.source_doc, c.text.trim()))
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Code-generation prompt: few-shot pairs, then one user turn holding the
/// retrieved context followed by the task.
pub fn assemble_rag_prompt(
    task: &str,
    retrieved: &[DocChunk],
    few_shot: &[(String, String)],
    settings: &PromptSettings,
) -> Result<PromptBundle, PromptError> {
    let mut messages = vec![ChatMessage::new(Role::Developer, RAG_INSTRUCTION)];
    for (t, code) in few_shot {
        messages.push(ChatMessage::new(Role::User, format!("Task: {t}")));
        messages.push(ChatMessage::new(Role::Assistant, code.clone()));
    }
    messages.push(ChatMessage::new(
        Role::User,
        format!("Reference documentation:\n{}\n\nTask: {task}", context_block(retrieved)),
    ));
    finish(messages, few_shot.len(), settings)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateRecord {
    pub task_id: String,
    pub executed: bool,
    pub passed: bool,
}

#[derive(Deserialize)]
struct RawRate {
    task_id: String,
    executed: u8,
    passed: u8,
}

/// Parse a `task_id,executed,passed` CSV of 0/1 flags.
pub fn parse_rate_results(text: &str) -> Result<Vec<RateRecord>, RetrievalError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| RetrievalError::Rates(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["task_id", "executed", "passed"] {
        return Err(RetrievalError::Rates("header must be `task_id,executed,passed`".into()));
    }
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (n, row) in rdr.deserialize::<RawRate>().enumerate() {
        let line = n + 2;
        let r = row.map_err(|e| RetrievalError::Rates(format!("line {line}: {e}")))?;
        if r.executed > 1 || r.passed > 1 {
            return Err(RetrievalError::Rates(format!("line {line}: flags must be 0 or 1")));
        }
        if r.passed == 1 && r.executed == 0 {
            return Err(RetrievalError::Rates(format!("line {line}: `{}` passed without executing", r.task_id)));
        }
        if !seen.insert(r.task_id.clone()) {
            return Err(RetrievalError::Rates(format!("line {line}: duplicate task `{}`", r.task_id)));
        }
        out.push(RateRecord {
            task_id: r.task_id,
            executed: r.executed == 1,
            passed: r.passed == 1,
        });
    }
    Ok(out)
}

pub fn read_rate_results(path: impl AsRef<Path>) -> Result<Vec<RateRecord>, RetrievalError> {
    let path = path.as_ref();
    parse_rate_results(&fs::read_to_string(path).map_err(io_err(path))?)
}

pub fn rate_score(records: &[RateRecord]) -> RateScore {
    let exec = records.iter().filter(|r| r.executed).count() as u64;
    let pass = records.iter().filter(|r| r.passed).count() as u64;
    RateScore::new(records.len() as u64, exec, pass).expect("records keep pass <= exec <= total")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(name: &str, text: &str) -> Vec<DocChunk> {
        chunk_documents(&[(name, text)], 20, 5).unwrap()
    }

    #[test]
    fn short_doc_is_one_chunk() {
        let c = doc("d", "hello world");
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].text, "hello world");
        assert_eq!(c[0].id, "d#0000");
        assert!(doc("e", "").is_empty());
    }

    #[test]
    fn packs_paragraphs_and_splits_long_ones() {
        let text = "aaaa\n\nbbbb\n\ncccccccccccccccccccccccccccccc\n\ndd";
        let c = doc("d", text);
        assert_eq!(c[0].text, "aaaa\n\nbbbb\n\n");
        assert_eq!(c[1].text.chars().count(), 20);
        assert_eq!(c[2].start, c[1].start + 15);
        assert!(c.iter().all(|x| x.text.chars().count() <= 20));
        assert_eq!(reconstruct(&c), text);
    }

    #[test]
    fn bad_sizes() {
        assert!(matches!(
            chunk_documents(&[("d", "x")], 5, 5),
            Err(RetrievalError::InvalidChunking { .. })
        ));
    }

    #[test]
    fn ranking_and_ties() {
        let chunks = chunk_documents(&[("b", "alpha beta"), ("a", "alpha beta"), ("c", "gamma")], 100, 0).unwrap();
        let index = ChunkIndex::tfidf(chunks).unwrap();
        let top = index.retrieve("alpha beta", 10).unwrap();
        let ids: Vec<&str> = top.iter().map(|(c, _)| c.id.as_str()).collect();
        assert_eq!(ids, ["a#0000", "b#0000", "c#0000"]);
        assert!((top[0].1 - 1.0).abs() < 1e-12);
        assert_eq!(top[2].1, 0.0);
        assert_eq!(index.retrieve("alpha", 1).unwrap().len(), 1);
        assert!(matches!(index.retrieve("alpha", 0), Err(RetrievalError::InvalidK)));
    }

    #[test]
    fn add_and_persist() {
        let mut index = ChunkIndex::tfidf(doc("a", "sum the range")).unwrap();
        let dim = index.dimension;
        index
            .add(DocChunk {
                id: "z".into(),
                source_doc: "z".into(),
                start: 0,
                text: "unrelated words".into(),
                vector: None,
            })
            .unwrap();
        assert_eq!(index.dimension, dim);
        assert!(index.chunks[1].vector.as_ref().unwrap().iter().all(|&x| x == 0.0));
        let back = ChunkIndex::from_json(&index.to_json()).unwrap();
        assert_eq!(back, index);
        assert_eq!(back.retrieve("range", 1).unwrap()[0].0.id, "a#0000");
        let dup = index.chunks[0].clone();
        assert!(matches!(index.add(dup), Err(RetrievalError::DuplicateId(_))));
    }

    #[test]
    fn empty_index() {
        let index = ChunkIndex::with_embedder(vec![], &TfIdf::fit(&["x"]).unwrap()).unwrap();
        assert!(matches!(index.retrieve_vector(&[], 3), Err(RetrievalError::EmptyIndex)));
    }

    #[test]
    fn rag_prompt() {
        let shots = vec![("Sum A1:A3".to_string(), "range.formulas = [[\"=SUM(A1:A3)\"]];".to_string())];
        let b = assemble_rag_prompt("Bold row 1", &[], &shots, &PromptSettings::default()).unwrap();
        assert_eq!(b.messages.len(), 4);
        assert_eq!(b.shot_count, 1);
        assert_eq!(b.messages[3].content, format!("Reference documentation:\n{NO_CONTEXT}\n\nTask: Bold row 1"));
    }

    #[test]
    fn rate_file() {
        let recs = parse_rate_results("task_id,executed,passed\nt1,1,1\nt2,1,0\nt3,0,0\n").unwrap();
        let s = rate_score(&recs);
        assert_eq!((s.total(), s.exec_count(), s.pass_count()), (3, 2, 1));
        assert!(parse_rate_results("task_id,executed,passed\nt1,0,1\n").is_err());
        assert!(parse_rate_results("task_id,executed,passed\nt1,2,0\n").is_err());
        assert!(parse_rate_results("task_id,executed,passed\nt1,1,0\nt1,1,0\n").is_err());
        assert!(parse_rate_results("id,ok\n").is_err());
    }
}
