//! Vocabulary, count vectors, embeddings and chi-square feature ranking.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::Lcg64;

pub const PAD: &str = "<pad>";
pub const UNK: &str = "<unk>";
pub const PAD_INDEX: usize = 0;
pub const UNK_INDEX: usize = 1;

/// Token ↔ index map with `PAD` at 0 and `UNK` at 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    min_freq: usize,
}

impl Vocabulary {
    /// Build from an explicit index-ordered token list whose first two
    /// entries are `PAD` and `UNK`.
    pub fn from_tokens(tokens: Vec<String>, min_freq: usize) -> Result<Self> {
        if tokens.len() < 2 || tokens[0] != PAD || tokens[1] != UNK {
            return Err(Error::InvalidArgument("vocabulary must start with <pad>, <unk>".into()));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate vocabulary entry {t:?}")));
            }
        }
        Ok(Vocabulary { tokens, index, min_freq })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min_freq(&self) -> usize {
        self.min_freq
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, index: usize) -> &str {
        &self.tokens[index]
    }

    /// Exact lookup, without the UNK fallback.
    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn lookup(&self, token: &str) -> usize {
        self.get(token).unwrap_or(UNK_INDEX)
    }
}

/// Index tokens with frequency ≥ `min_freq`, most frequent first, ties by
/// lexicographic token order. Tokens equal to the reserved names are skipped.
pub fn build_vocab<I, S, T>(sentences: I, min_freq: usize) -> Vocabulary
where
    I: IntoIterator<Item = S>,
    S: IntoIterator<Item = T>,
    T: AsRef<str>,
{
    let min_freq = min_freq.max(1);
    let mut counts: HashMap<String, usize> = HashMap::new();
    for sentence in sentences {
        for tok in sentence {
            *counts.entry(tok.as_ref().to_string()).or_insert(0) += 1;
        }
    }
    let mut kept: Vec<(String, usize)> = counts
        .into_iter()
        .filter(|(t, c)| *c >= min_freq && t != PAD && t != UNK)
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    let mut tokens = vec![PAD.to_string(), UNK.to_string()];
    tokens.extend(kept.into_iter().map(|(t, _)| t));
    Vocabulary::from_tokens(tokens, min_freq).expect("reserved entries present and tokens unique")
}

pub fn one_hot(index: usize, size: usize) -> Result<Vec<f64>> {
    if index >= size {
        return Err(Error::InvalidArgument(format!("one-hot index {index} out of range for size {size}")));
    }
    let mut v = vec![0.0; size];
    v[index] = 1.0;
    Ok(v)
}

/// Sparse term-frequency vector: index → count. Out-of-vocabulary tokens all
/// count towards `UNK_INDEX`.
pub fn tf_vector<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary) -> BTreeMap<usize, usize> {
    let mut counts = BTreeMap::new();
    for t in tokens {
        *counts.entry(vocab.lookup(t.as_ref())).or_insert(0) += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScore {
    pub feature: String,
    pub chi2: f64,
}

/// χ² of a 2×2 table: `a` = feature present ∧ class, `b` = present ∧ ¬class,
/// `c` = absent ∧ class, `d` = absent ∧ ¬class. Zero if any margin is zero.
pub fn chi_square_2x2(a: u64, b: u64, c: u64, d: u64) -> f64 {
    let (a, b, c, d) = (a as f64, b as f64, c as f64, d as f64);
    let denom = (a + b) * (c + d) * (a + c) * (b + d);
    if denom == 0.0 {
        return 0.0;
    }
    let n = a + b + c + d;
    let diff = a * d - b * c;
    n * diff * diff / denom
}

/// Rank features by χ² against a binary class.
///
/// `presence[s][f]` says whether feature `f` occurs in sentence `s`;
/// `labels[s]` whether sentence `s` is in the class. Returns the top `k`,
/// highest χ² first, ties by feature id.
pub fn chi_square_select(
    features: &[String],
    presence: &[Vec<bool>],
    labels: &[bool],
    k: usize,
) -> Result<Vec<FeatureScore>> {
    if presence.len() != labels.len() {
        return Err(Error::LengthMismatch(format!(
            "{} presence rows but {} labels",
            presence.len(),
            labels.len()
        )));
    }
    if let Some((i, row)) = presence.iter().enumerate().find(|(_, r)| r.len() != features.len()) {
        return Err(Error::LengthMismatch(format!(
            "presence row {i} has {} entries, expected {}",
            row.len(),
            features.len()
        )));
    }
    let mut scores: Vec<FeatureScore> = features
        .iter()
        .enumerate()
        .map(|(f, name)| {
            let mut t = [0u64; 4];
            for (row, &y) in presence.iter().zip(labels) {
                let cell = match (row[f], y) {
                    (true, true) => 0,
                    (true, false) => 1,
                    (false, true) => 2,
                    (false, false) => 3,
                };
                t[cell] += 1;
            }
            FeatureScore {
                feature: name.clone(),
                chi2: chi_square_2x2(t[0], t[1], t[2], t[3]),
            }
        })
        .collect();
    scores.sort_by(|a, b| b.chi2.total_cmp(&a.chi2).then_with(|| a.feature.cmp(&b.feature)));
    scores.truncate(k);
    Ok(scores)
}

/// Build the presence matrix for [`chi_square_select`] from per-sentence
/// feature sets. Features are returned in sorted order.
pub fn presence_matrix<S: AsRef<str>>(per_sentence: &[Vec<S>]) -> (Vec<String>, Vec<Vec<bool>>) {
    let mut ids: BTreeMap<&str, usize> = BTreeMap::new();
    for s in per_sentence {
        for f in s {
            ids.insert(f.as_ref(), 0);
        }
    }
    for (i, v) in ids.values_mut().enumerate() {
        *v = i;
    }
    let rows = per_sentence
        .iter()
        .map(|s| {
            let mut row = vec![false; ids.len()];
            for f in s {
                row[ids[f.as_ref()]] = true;
            }
            row
        })
        .collect();
    (ids.keys().map(|s| s.to_string()).collect(), rows)
}

/// `V × d` embedding table, row `i` belonging to vocabulary index `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix(Matrix);

impl EmbeddingMatrix {
    pub fn new(matrix: Matrix) -> Result<Self> {
        if matrix.as_slice().iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("embedding entries must be finite".into()));
        }
        Ok(EmbeddingMatrix(matrix))
    }

    pub fn vocab_size(&self) -> usize {
        self.0.rows()
    }

    pub fn dim(&self) -> usize {
        self.0.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.0.row(i)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut Matrix {
        &mut self.0
    }
}

/// Uniform `[-scale, scale)` entries from [`Lcg64`] seeded with `seed`, drawn
/// row by row; the PAD row is then zeroed.
pub fn random_init(vocab_size: usize, dim: usize, seed: u64, scale: f64) -> EmbeddingMatrix {
    let mut rng = Lcg64::new(seed);
    let mut m = Matrix::zeros(vocab_size, dim);
    for x in m.as_mut_slice() {
        *x = rng.uniform(scale);
    }
    if vocab_size > PAD_INDEX {
        m.row_mut(PAD_INDEX).fill(0.0);
    }
    EmbeddingMatrix(m)
}

/// Load vectors in the `V d` header text format. Rows for vocabulary tokens
/// found in the file are copied; all other rows (and PAD/UNK) come from
/// [`random_init`] with the same `seed` and `scale`.
pub fn load_pretrained<P: AsRef<Path>>(
    path: P,
    vocab: &Vocabulary,
    dim: usize,
    seed: u64,
    scale: f64,
) -> Result<EmbeddingMatrix> {
    let reader = BufReader::new(File::open(path)?);
    read_pretrained(reader, vocab, dim, seed, scale)
}

pub fn read_pretrained<R: BufRead>(
    reader: R,
    vocab: &Vocabulary,
    dim: usize,
    seed: u64,
    scale: f64,
) -> Result<EmbeddingMatrix> {
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line?,
        None => return Err(Error::parse(1, "missing `V d` header")),
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    let parse_usize = |s: &str| s.parse::<usize>().map_err(|_| Error::parse(1, format!("bad header field {s:?}")));
    if fields.len() != 2 {
        return Err(Error::parse(1, "header must be `V d`"));
    }
    let (rows, file_dim) = (parse_usize(fields[0])?, parse_usize(fields[1])?);
    if file_dim != dim {
        return Err(Error::Shape(format!("embedding file has dimension {file_dim}, expected {dim}")));
    }

    let mut emb = random_init(vocab.len(), dim, seed, scale);
    let mut filled = vec![false; vocab.len()];
    let mut seen = 0;
    for (i, line) in lines {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        seen += 1;
        let mut parts = line.split(' ').filter(|s| !s.is_empty());
        let token = parts.next().ok_or_else(|| Error::parse(line_no, "empty row"))?;
        let values = parts
            .map(|s| {
                s.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::parse(line_no, format!("non-numeric value {s:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != dim {
            return Err(Error::parse(line_no, format!("row has {} values, expected {dim}", values.len())));
        }
        match vocab.get(token) {
            Some(idx) if idx > UNK_INDEX && !filled[idx] => {
                emb.0.row_mut(idx).copy_from_slice(&values);
                filled[idx] = true;
            }
            _ => {}
        }
    }
    if seen != rows {
        return Err(Error::Shape(format!("header declares {rows} rows, file has {seen}")));
    }
    Ok(emb)
}

/// Write every row in the format read by [`load_pretrained`].
pub fn write_embeddings<W: Write>(mut writer: W, vocab: &Vocabulary, emb: &EmbeddingMatrix) -> Result<()> {
    if vocab.len() != emb.vocab_size() {
        return Err(Error::Shape(format!(
            "vocabulary has {} entries, embeddings {} rows",
            vocab.len(),
            emb.vocab_size()
        )));
    }
    writeln!(writer, "{} {}", emb.vocab_size(), emb.dim())?;
    for (i, tok) in vocab.tokens().iter().enumerate() {
        write!(writer, "{tok}")?;
        for x in emb.row(i) {
            write!(writer, " {x:e}")?;
        }
        writeln!(writer)?;
    }
    writer.flush()?;
    Ok(())
}
