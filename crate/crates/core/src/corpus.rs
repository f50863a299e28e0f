//! Annotated corpus records, raw documents, and deterministic splitting.
//!
//! Both file kinds are line-delimited JSON, one object per line:
//!
//! ```text
//! {"tokens":["حجز","في","سطيف"],"tags":["O","O","B-LOC"],"doc_id":"d1"}
//! {"id":"d1","text":"...","source":"website","date":"2019-05-26"}
//! ```
//!
//! Blank lines are ignored. Tags are canonicalized to the short class names
//! on load (`B-EVENT` becomes `B-EVT`).

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Lcg64;
use crate::tags::{validate_tags, Tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Report,
    Website,
    Social,
}

/// A raw collected document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<String>,
}

/// A tokenized sentence paired with its IOB tags.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct AnnotatedSentence {
    pub tokens: Vec<String>,
    pub tags: Vec<Tag>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub doc_id: Option<String>,
}

impl AnnotatedSentence {
    /// Validates arity and the IOB scheme.
    pub fn new<S: AsRef<str>>(tokens: Vec<String>, tags: &[S], doc_id: Option<String>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::LengthMismatch("sentence has no tokens".into()));
        }
        if tokens.len() != tags.len() {
            return Err(Error::LengthMismatch(format!(
                "{} tokens but {} tags",
                tokens.len(),
                tags.len()
            )));
        }
        validate_tags(tags)?;
        let tags = tags.iter().map(|t| t.as_ref().parse()).collect::<Result<_>>()?;
        Ok(AnnotatedSentence { tokens, tags, doc_id })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tag_strings(&self) -> Vec<String> {
        self.tags.iter().map(Tag::to_string).collect()
    }
}

#[derive(Deserialize)]
struct RawAnnotated {
    tokens: Vec<String>,
    tags: Vec<String>,
    #[serde(default)]
    doc_id: Option<String>,
}

/// A tokenized sentence without annotation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc_id: Option<String>,
}

impl From<&AnnotatedSentence> for Sentence {
    fn from(s: &AnnotatedSentence) -> Self {
        Sentence {
            tokens: s.tokens.clone(),
            doc_id: s.doc_id.clone(),
        }
    }
}

fn for_each_record<P, F>(path: P, mut f: F) -> Result<()>
where
    P: AsRef<Path>,
    F: FnMut(usize, &str) -> Result<()>,
{
    let reader = BufReader::new(File::open(path)?);
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::parse(i + 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        f(i + 1, &line)?;
    }
    Ok(())
}

/// Parse one annotated record. `line` is used for error reporting.
pub fn parse_annotated(line_no: usize, line: &str) -> Result<AnnotatedSentence> {
    let raw: RawAnnotated =
        serde_json::from_str(line).map_err(|e| Error::parse(line_no, format!("malformed record: {e}")))?;
    AnnotatedSentence::new(raw.tokens, &raw.tags, raw.doc_id).map_err(|e| Error::parse(line_no, e.to_string()))
}

/// Load an annotated corpus, validating every record.
pub fn load_corpus<P: AsRef<Path>>(path: P) -> Result<Vec<AnnotatedSentence>> {
    let mut out = Vec::new();
    for_each_record(path, |n, line| {
        out.push(parse_annotated(n, line)?);
        Ok(())
    })?;
    Ok(out)
}

/// Load sentence records. Only `tokens` and `doc_id` are read, so annotated
/// corpus files are accepted too.
pub fn load_sentences<P: AsRef<Path>>(path: P) -> Result<Vec<Sentence>> {
    let mut out = Vec::new();
    for_each_record(path, |n, line| {
        let s: Sentence =
            serde_json::from_str(line).map_err(|e| Error::parse(n, format!("malformed record: {e}")))?;
        out.push(s);
        Ok(())
    })?;
    Ok(out)
}

/// Load raw documents. Ids must be nonempty and unique, texts nonempty.
pub fn load_documents<P: AsRef<Path>>(path: P) -> Result<Vec<Document>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for_each_record(path, |n, line| {
        let d: Document =
            serde_json::from_str(line).map_err(|e| Error::parse(n, format!("malformed document: {e}")))?;
        if d.id.is_empty() {
            return Err(Error::parse(n, "empty document id"));
        }
        if d.text.is_empty() {
            return Err(Error::parse(n, format!("document {:?} has empty text", d.id)));
        }
        if !seen.insert(d.id.clone()) {
            return Err(Error::parse(n, format!("duplicate document id {:?}", d.id)));
        }
        out.push(d);
        Ok(())
    })?;
    Ok(out)
}

/// Write any serializable records one JSON object per line.
pub fn write_records<W: Write, T: Serialize>(mut writer: W, records: &[T]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut writer, r).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn save_records<P: AsRef<Path>, T: Serialize>(path: P, records: &[T]) -> Result<()> {
    write_records(std::io::BufWriter::new(File::create(path)?), records)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSplit<T> {
    pub train: Vec<T>,
    pub dev: Vec<T>,
    pub test: Vec<T>,
}

/// Shuffle with [`Lcg64`] seeded by `seed`, then cut: train gets
/// `floor(N·r_train)`, dev `floor(N·r_dev)`, test the remainder.
pub fn split_corpus<T: Clone>(items: &[T], ratios: [f64; 3], seed: u64) -> Result<CorpusSplit<T>> {
    if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(Error::InvalidArgument(format!("split ratios must be non-negative, got {ratios:?}")));
    }
    let sum: f64 = ratios.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("split ratios sum to {sum}, expected 1")));
    }
    if items.is_empty() {
        return Err(Error::InvalidArgument("cannot split an empty corpus".into()));
    }
    let n = items.len();
    // The 1e-9 slack absorbs binary representation error (0.29 · 100 = 28.999…).
    let cut = |r: f64| ((n as f64 * r + 1e-9).floor() as usize).min(n);
    let n_train = cut(ratios[0]);
    let n_dev = cut(ratios[1]).min(n - n_train);

    let mut order: Vec<usize> = (0..n).collect();
    Lcg64::new(seed).shuffle(&mut order);
    let mut shuffled = order.into_iter().map(|i| items[i].clone());
    let train = shuffled.by_ref().take(n_train).collect();
    let dev = shuffled.by_ref().take(n_dev).collect();
    let test = shuffled.collect();
    Ok(CorpusSplit { train, dev, test })
}
