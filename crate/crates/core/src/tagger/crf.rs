//! Linear-chain CRF: log-partition, sequence scores, Viterbi decoding, the
//! negative log-likelihood and its gradient via forward-backward marginals.
//!
//! For emissions `E` (`L × T`) and tags `y`:
//!
//! ```text
//! score(y) = start[y0] + Σt E[t][yt] + Σt trans[y(t-1)][yt] + end[y(L-1)]
//! ```

use crate::error::{Error, Result};
use crate::linalg::{log_sum_exp, Matrix};
use crate::tags::{Tag, TagSet};

/// Score given to forbidden transitions. Finite so that `x - max` stays
/// well defined in log-sum-exp.
pub const IMPOSSIBLE: f64 = -1e30;

#[derive(Debug, Clone, PartialEq)]
pub struct CrfParams {
    /// `transitions[i][j]`: score of tag `j` following tag `i`.
    pub transitions: Matrix,
    pub start: Vec<f64>,
    pub end: Vec<f64>,
}

impl CrfParams {
    pub fn zeros(num_tags: usize) -> Self {
        CrfParams {
            transitions: Matrix::zeros(num_tags, num_tags),
            start: vec![0.0; num_tags],
            end: vec![0.0; num_tags],
        }
    }

    pub fn num_tags(&self) -> usize {
        self.start.len()
    }

    pub fn slices(&self) -> [&[f64]; 3] {
        [self.transitions.as_slice(), &self.start, &self.end]
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 3] {
        [self.transitions.as_mut_slice(), &mut self.start, &mut self.end]
    }

    /// Copy with IOB-invalid moves (`start → I-X`, `O → I-X`, `B-X/I-X → I-Y`
    /// for `X ≠ Y`) set to [`IMPOSSIBLE`].
    pub fn with_iob_mask(&self, tagset: &TagSet) -> CrfParams {
        let mut masked = self.clone();
        for (j, &to) in tagset.tags().iter().enumerate() {
            if !to.may_follow(None) {
                masked.start[j] = IMPOSSIBLE;
            }
            for (i, &from) in tagset.tags().iter().enumerate() {
                if !to.may_follow(Some(from)) {
                    masked.transitions.set(i, j, IMPOSSIBLE);
                }
            }
        }
        masked
    }

    fn check_emissions(&self, emissions: &Matrix) -> Result<()> {
        if emissions.cols() != self.num_tags() {
            return Err(Error::Shape(format!(
                "emissions have {} columns, crf has {} tags",
                emissions.cols(),
                self.num_tags()
            )));
        }
        Ok(())
    }
}

/// Forward log-messages: `alpha[t][j]` = log-sum of scores of all prefixes
/// ending in tag `j` at `t` (excluding `end`).
fn forward(emissions: &Matrix, crf: &CrfParams) -> Matrix {
    let (len, n) = (emissions.rows(), emissions.cols());
    let mut alpha = Matrix::zeros(len, n);
    if len == 0 {
        return alpha;
    }
    for j in 0..n {
        alpha.set(0, j, crf.start[j] + emissions.get(0, j));
    }
    let mut buf = vec![0.0; n];
    for t in 1..len {
        for j in 0..n {
            for (i, b) in buf.iter_mut().enumerate() {
                *b = alpha.get(t - 1, i) + crf.transitions.get(i, j);
            }
            alpha.set(t, j, log_sum_exp(&buf) + emissions.get(t, j));
        }
    }
    alpha
}

/// Backward log-messages: `beta[t][i]` = log-sum of scores of all suffixes
/// after position `t` given tag `i` at `t` (including `end`).
fn backward(emissions: &Matrix, crf: &CrfParams) -> Matrix {
    let (len, n) = (emissions.rows(), emissions.cols());
    let mut beta = Matrix::zeros(len, n);
    if len == 0 {
        return beta;
    }
    beta.row_mut(len - 1).copy_from_slice(&crf.end);
    let mut buf = vec![0.0; n];
    for t in (0..len - 1).rev() {
        for i in 0..n {
            for (j, b) in buf.iter_mut().enumerate() {
                *b = crf.transitions.get(i, j) + emissions.get(t + 1, j) + beta.get(t + 1, j);
            }
            beta.set(t, i, log_sum_exp(&buf));
        }
    }
    beta
}

fn final_log_partition(alpha: &Matrix, crf: &CrfParams) -> f64 {
    let last = alpha.rows() - 1;
    let terms: Vec<f64> = (0..crf.num_tags()).map(|j| alpha.get(last, j) + crf.end[j]).collect();
    log_sum_exp(&terms)
}

/// `log Σ_y exp(score(y))` over all `T^L` tag sequences. Zero for `L = 0`.
pub fn crf_log_partition(emissions: &Matrix, crf: &CrfParams) -> Result<f64> {
    crf.check_emissions(emissions)?;
    if emissions.rows() == 0 {
        return Ok(0.0);
    }
    Ok(final_log_partition(&forward(emissions, crf), crf))
}

pub fn crf_sequence_score(emissions: &Matrix, crf: &CrfParams, tags: &[usize]) -> Result<f64> {
    crf.check_emissions(emissions)?;
    if tags.len() != emissions.rows() {
        return Err(Error::LengthMismatch(format!(
            "{} tags for {} emission rows",
            tags.len(),
            emissions.rows()
        )));
    }
    if let Some(&bad) = tags.iter().find(|&&y| y >= crf.num_tags()) {
        return Err(Error::InvalidArgument(format!("tag index {bad} out of range")));
    }
    let Some((&first, _)) = tags.split_first() else {
        return Ok(0.0);
    };
    let mut score = crf.start[first] + crf.end[tags[tags.len() - 1]];
    for (t, &y) in tags.iter().enumerate() {
        score += emissions.get(t, y);
        if t > 0 {
            score += crf.transitions.get(tags[t - 1], y);
        }
    }
    Ok(score)
}

/// Highest-scoring path and its score. On ties the lowest tag index wins at
/// the final position and at every backpointer.
pub fn viterbi_decode(emissions: &Matrix, crf: &CrfParams) -> Result<(Vec<usize>, f64)> {
    crf.check_emissions(emissions)?;
    let (len, n) = (emissions.rows(), emissions.cols());
    if len == 0 {
        return Ok((Vec::new(), 0.0));
    }
    let mut delta: Vec<f64> = (0..n).map(|j| crf.start[j] + emissions.get(0, j)).collect();
    let mut back = vec![vec![0usize; n]; len];
    let mut next = vec![0.0; n];
    for t in 1..len {
        for j in 0..n {
            let (mut best_i, mut best) = (0, f64::NEG_INFINITY);
            for (i, &d) in delta.iter().enumerate() {
                let s = d + crf.transitions.get(i, j);
                if s > best {
                    best = s;
                    best_i = i;
                }
            }
            back[t][j] = best_i;
            next[j] = best + emissions.get(t, j);
        }
        std::mem::swap(&mut delta, &mut next);
    }
    let (mut last, mut best) = (0, f64::NEG_INFINITY);
    for (j, &d) in delta.iter().enumerate() {
        let s = d + crf.end[j];
        if s > best {
            best = s;
            last = j;
        }
    }
    let mut path = vec![0; len];
    path[len - 1] = last;
    for t in (1..len).rev() {
        path[t - 1] = back[t][path[t]];
    }
    Ok((path, best))
}

/// `−log p(gold | emissions)`.
pub fn nll_loss(emissions: &Matrix, crf: &CrfParams, gold: &[usize]) -> Result<f64> {
    let score = crf_sequence_score(emissions, crf, gold)?;
    Ok(crf_log_partition(emissions, crf)? - score)
}

/// Loss plus its gradient with respect to the emissions and the CRF
/// parameters. Expected counts come from forward-backward marginals.
pub fn nll_with_gradient(emissions: &Matrix, crf: &CrfParams, gold: &[usize]) -> Result<(f64, Matrix, CrfParams)> {
    let gold_score = crf_sequence_score(emissions, crf, gold)?;
    let (len, n) = (emissions.rows(), emissions.cols());
    let mut d_emit = Matrix::zeros(len, n);
    let mut d_crf = CrfParams::zeros(n);
    if len == 0 {
        return Ok((0.0, d_emit, d_crf));
    }
    let alpha = forward(emissions, crf);
    let beta = backward(emissions, crf);
    let log_z = final_log_partition(&alpha, crf);

    for t in 0..len {
        for j in 0..n {
            let p = (alpha.get(t, j) + beta.get(t, j) - log_z).exp();
            d_emit.set(t, j, p);
        }
    }
    for j in 0..n {
        d_crf.start[j] = d_emit.get(0, j);
        d_crf.end[j] = d_emit.get(len - 1, j);
    }
    for t in 1..len {
        for i in 0..n {
            let a = alpha.get(t - 1, i);
            for j in 0..n {
                let p = (a + crf.transitions.get(i, j) + emissions.get(t, j) + beta.get(t, j) - log_z).exp();
                let cur = d_crf.transitions.get(i, j);
                d_crf.transitions.set(i, j, cur + p);
            }
        }
    }

    // subtract the observed counts
    for (t, &y) in gold.iter().enumerate() {
        d_emit.set(t, y, d_emit.get(t, y) - 1.0);
        if t > 0 {
            let prev = gold[t - 1];
            let cur = d_crf.transitions.get(prev, y);
            d_crf.transitions.set(prev, y, cur - 1.0);
        }
    }
    d_crf.start[gold[0]] -= 1.0;
    d_crf.end[gold[len - 1]] -= 1.0;

    Ok((log_z - gold_score, d_emit, d_crf))
}

/// Viterbi under the IOB mask, mapped back to tags.
pub fn decode_tags(emissions: &Matrix, crf: &CrfParams, tagset: &TagSet) -> Result<Vec<Tag>> {
    let masked = crf.with_iob_mask(tagset);
    let (path, _) = viterbi_decode(emissions, &masked)?;
    Ok(tagset.decode(&path))
}
