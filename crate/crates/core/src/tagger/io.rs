//! Versioned plain-text model files.
//!
//! ```text
//! HAZARDTAG 1
//! CONFIG <n>          n lines `key value`
//! TAGSET <T>          T tag names
//! VOCAB <V> <min_freq>
//!                     V tokens, one per line, index order
//! STEM <n>            n lines of stem rules (0 = no stemming)
//! EMB <V> <d>         V rows of d reals
//! LSTM_FWD <d> <h>    per gate (i, f, o, g): input h×d; then recurrent h×h; then bias 1×h
//! LSTM_BWD <d> <h>
//! PROJ <T> <2h>       T rows, then one bias row
//! CRF <T>             start row, end row, then T transition rows
//! END
//! ```
//!
//! Reals are written in shortest round-trip exponent form, so loading a
//! saved model reproduces it bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::{EmbeddingMatrix, Vocabulary};
use crate::linalg::Matrix;
use crate::tags::TagSet;
use crate::text::StemRuleTable;

use super::crf::CrfParams;
use super::lstm::LstmParams;
use super::model::{Network, TaggerModel, TrainConfig};

pub const MODEL_HEADER: &str = "HAZARDTAG 1";

fn push_row(out: &mut String, row: &[f64]) {
    for (i, x) in row.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write!(out, "{x:e}").unwrap();
    }
    out.push('\n');
}

fn push_matrix(out: &mut String, m: &Matrix) {
    for r in 0..m.rows() {
        push_row(out, m.row(r));
    }
}

fn push_lstm(out: &mut String, name: &str, p: &LstmParams) {
    writeln!(out, "{name} {} {}", p.input_dim(), p.hidden_dim()).unwrap();
    for m in p.input.iter().chain(&p.recurrent) {
        push_matrix(out, m);
    }
    for b in &p.bias {
        push_row(out, b);
    }
}

pub fn write_model(model: &TaggerModel) -> Result<String> {
    model.validate()?;
    let mut out = String::new();
    out.push_str(MODEL_HEADER);
    out.push('\n');

    let c = &model.config;
    let config = [
        ("learning_rate", format!("{:e}", c.learning_rate)),
        ("epochs", c.epochs.to_string()),
        ("seed", c.seed.to_string()),
        ("hidden_size", c.hidden_size.to_string()),
        ("embedding_dim", c.embedding_dim.to_string()),
        ("clip", format!("{:e}", c.clip)),
        ("shuffle", c.shuffle.to_string()),
        ("embedding_scale", format!("{:e}", c.embedding_scale)),
    ];
    writeln!(out, "CONFIG {}", config.len()).unwrap();
    for (k, v) in config {
        writeln!(out, "{k} {v}").unwrap();
    }

    writeln!(out, "TAGSET {}", model.tagset.len()).unwrap();
    for name in model.tagset.names() {
        writeln!(out, "{name}").unwrap();
    }

    writeln!(out, "VOCAB {} {}", model.vocab.len(), model.vocab.min_freq()).unwrap();
    for tok in model.vocab.tokens() {
        if tok.is_empty() || tok.contains(['\n', '\r']) {
            return Err(Error::InvalidArgument(format!("token {tok:?} cannot be stored in a model file")));
        }
        writeln!(out, "{tok}").unwrap();
    }

    let rules = model.stemmer.as_ref().map(StemRuleTable::to_rules_string).unwrap_or_default();
    writeln!(out, "STEM {}", rules.lines().count()).unwrap();
    out.push_str(&rules);

    writeln!(out, "EMB {} {}", model.network.embeddings.vocab_size(), model.network.embeddings.dim()).unwrap();
    push_matrix(&mut out, model.network.embeddings.matrix());
    push_lstm(&mut out, "LSTM_FWD", &model.network.forward);
    push_lstm(&mut out, "LSTM_BWD", &model.network.backward);

    writeln!(out, "PROJ {} {}", model.network.proj_weight.rows(), model.network.proj_weight.cols()).unwrap();
    push_matrix(&mut out, &model.network.proj_weight);
    push_row(&mut out, &model.network.proj_bias);

    writeln!(out, "CRF {}", model.network.crf.num_tags()).unwrap();
    push_row(&mut out, &model.network.crf.start);
    push_row(&mut out, &model.network.crf.end);
    push_matrix(&mut out, &model.network.crf.transitions);
    out.push_str("END\n");
    Ok(out)
}

pub fn save_model<P: AsRef<Path>>(model: &TaggerModel, path: P) -> Result<()> {
    fs::write(path, write_model(model)?)?;
    Ok(())
}

pub fn load_model<P: AsRef<Path>>(path: P) -> Result<TaggerModel> {
    read_model(&fs::read_to_string(path)?)
}

struct Cursor<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    line_no: usize,
}

impl<'a> Cursor<'a> {
    fn next(&mut self) -> Result<&'a str> {
        match self.lines.next() {
            Some((i, l)) => {
                self.line_no = i + 1;
                Ok(l)
            }
            None => Err(Error::parse(self.line_no + 1, "unexpected end of model file")),
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.line_no, msg)
    }

    /// Read a `NAME a b ...` section header with exactly `arity` integers.
    fn section(&mut self, name: &str, arity: usize) -> Result<Vec<usize>> {
        let line = self.next()?;
        let mut parts = line.split(' ');
        if parts.next() != Some(name) {
            return Err(self.err(format!("expected section {name}, found {line:?}")));
        }
        let dims = parts
            .map(|p| p.parse::<usize>().map_err(|_| self.err(format!("bad dimension {p:?} in {name}"))))
            .collect::<Result<Vec<_>>>()?;
        if dims.len() != arity {
            return Err(self.err(format!("{name} expects {arity} dimensions")));
        }
        Ok(dims)
    }

    fn row(&mut self, width: usize) -> Result<Vec<f64>> {
        let line = self.next()?;
        let values = line
            .split(' ')
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| self.err(format!("bad number {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != width {
            return Err(self.err(format!("expected {width} values, found {}", values.len())));
        }
        Ok(values)
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<Matrix> {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            data.extend(self.row(cols)?);
        }
        Ok(Matrix::from_vec(rows, cols, data))
    }

    fn lstm(&mut self, name: &str, d: usize, h: usize) -> Result<LstmParams> {
        let dims = self.section(name, 2)?;
        if dims != [d, h] {
            return Err(self.err(format!("{name} is {}×{}, expected {d}×{h}", dims[0], dims[1])));
        }
        let mut p = LstmParams::zeros(d, h);
        for m in p.input.iter_mut() {
            *m = self.matrix(h, d)?;
        }
        for m in p.recurrent.iter_mut() {
            *m = self.matrix(h, h)?;
        }
        for b in p.bias.iter_mut() {
            *b = self.row(h)?;
        }
        Ok(p)
    }
}

pub fn read_model(text: &str) -> Result<TaggerModel> {
    let mut cur = Cursor {
        lines: text.lines().enumerate(),
        line_no: 0,
    };
    if cur.next()? != MODEL_HEADER {
        return Err(cur.err(format!("missing `{MODEL_HEADER}` header")));
    }

    let n_config = cur.section("CONFIG", 1)?[0];
    let mut config = TrainConfig::default();
    for _ in 0..n_config {
        let line = cur.next()?;
        let (k, v) = line.split_once(' ').ok_or_else(|| cur.err("expected `key value`"))?;
        let bad = || cur.err(format!("bad value {v:?} for {k}"));
        match k {
            "learning_rate" => config.learning_rate = v.parse().map_err(|_| bad())?,
            "epochs" => config.epochs = v.parse().map_err(|_| bad())?,
            "seed" => config.seed = v.parse().map_err(|_| bad())?,
            "hidden_size" => config.hidden_size = v.parse().map_err(|_| bad())?,
            "embedding_dim" => config.embedding_dim = v.parse().map_err(|_| bad())?,
            "clip" => config.clip = v.parse().map_err(|_| bad())?,
            "shuffle" => config.shuffle = v.parse().map_err(|_| bad())?,
            "embedding_scale" => config.embedding_scale = v.parse().map_err(|_| bad())?,
            _ => return Err(cur.err(format!("unknown config key {k:?}"))),
        }
    }

    let n_tags = cur.section("TAGSET", 1)?[0];
    let tagset = TagSet::default();
    let mut names = Vec::with_capacity(n_tags);
    for _ in 0..n_tags {
        names.push(cur.next()?.to_string());
    }
    if names != tagset.names() {
        return Err(cur.err("tag set differs from the supported 13-tag inventory"));
    }

    let vdims = cur.section("VOCAB", 2)?;
    let mut tokens = Vec::with_capacity(vdims[0]);
    for _ in 0..vdims[0] {
        tokens.push(cur.next()?.to_string());
    }
    let vocab = Vocabulary::from_tokens(tokens, vdims[1]).map_err(|e| cur.err(e.to_string()))?;

    let n_rules = cur.section("STEM", 1)?[0];
    let stemmer = if n_rules == 0 {
        None
    } else {
        let mut rules = String::new();
        for _ in 0..n_rules {
            rules.push_str(cur.next()?);
            rules.push('\n');
        }
        Some(rules.parse::<StemRuleTable>().map_err(|e| cur.err(e.to_string()))?)
    };

    let edims = cur.section("EMB", 2)?;
    let (v, d) = (edims[0], edims[1]);
    if v != vocab.len() {
        return Err(cur.err(format!("EMB has {v} rows for a vocabulary of {}", vocab.len())));
    }
    let embeddings = EmbeddingMatrix::new(cur.matrix(v, d)?)?;

    let h = config.hidden_size;
    let forward = cur.lstm("LSTM_FWD", d, h)?;
    let backward = cur.lstm("LSTM_BWD", d, h)?;

    let pdims = cur.section("PROJ", 2)?;
    if pdims != [n_tags, 2 * h] {
        return Err(cur.err("PROJ dimensions do not match tag set and hidden size"));
    }
    let proj_weight = cur.matrix(n_tags, 2 * h)?;
    let proj_bias = cur.row(n_tags)?;

    if cur.section("CRF", 1)?[0] != n_tags {
        return Err(cur.err("CRF size does not match tag set"));
    }
    let start = cur.row(n_tags)?;
    let end = cur.row(n_tags)?;
    let transitions = cur.matrix(n_tags, n_tags)?;
    if cur.next()? != "END" {
        return Err(cur.err("expected END"));
    }

    let model = TaggerModel {
        network: Network {
            embeddings,
            forward,
            backward,
            proj_weight,
            proj_bias,
            crf: CrfParams { transitions, start, end },
        },
        tagset,
        vocab,
        stemmer,
        config,
    };
    model.validate()?;
    Ok(model)
}
