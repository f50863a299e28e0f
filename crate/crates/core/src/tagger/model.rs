//! The BiLSTM-CRF tagger: parameters, forward pass, exact gradients and
//! inference.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::features::{random_init, EmbeddingMatrix, Vocabulary};
use crate::linalg::{axpy, Matrix};
use crate::rng::Lcg64;
use crate::tags::{Tag, TagSet};
use crate::text::{stem, StemRuleTable};

use super::crf::{decode_tags, nll_loss, nll_with_gradient, CrfParams};
use super::lstm::{backprop, encode_rows, glorot_fill, LstmParams};

/// Training and architecture settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub hidden_size: usize,
    pub embedding_dim: usize,
    /// Global L2-norm clipping threshold.
    pub clip: f64,
    pub shuffle: bool,
    /// Half-width of the uniform interval for randomly initialized embedding rows.
    pub embedding_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.05,
            epochs: 10,
            seed: 42,
            hidden_size: 64,
            embedding_dim: 100,
            clip: 5.0,
            shuffle: true,
            embedding_scale: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be > 0");
        }
        if self.clip.is_nan() || self.clip <= 0.0 {
            return bad("clip must be > 0");
        }
        if self.hidden_size == 0 || self.embedding_dim == 0 {
            return bad("hidden_size and embedding_dim must be ≥ 1");
        }
        if !(self.embedding_scale >= 0.0 && self.embedding_scale.is_finite()) {
            return bad("embedding_scale must be ≥ 0");
        }
        Ok(())
    }

    /// Seed of the stream used for LSTM, projection and transition init.
    pub fn param_seed(&self) -> u64 {
        self.seed.wrapping_add(1)
    }

    /// Seed of the stream used for per-epoch shuffling.
    pub fn shuffle_seed(&self) -> u64 {
        self.seed.wrapping_add(2)
    }
}

/// The trainable parameters: embeddings → BiLSTM → projection → CRF. Works
/// for any number of tags.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub embeddings: EmbeddingMatrix,
    pub forward: LstmParams,
    pub backward: LstmParams,
    /// `T × 2h`.
    pub proj_weight: Matrix,
    pub proj_bias: Vec<f64>,
    pub crf: CrfParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaggerModel {
    pub network: Network,
    pub tagset: TagSet,
    pub vocab: Vocabulary,
    /// Applied to every token before vocabulary lookup when present.
    pub stemmer: Option<StemRuleTable>,
    pub config: TrainConfig,
}

/// Gradient of the loss for every trainable parameter. Embedding gradients
/// are kept only for rows that occur in the sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub embeddings: BTreeMap<usize, Vec<f64>>,
    pub forward: LstmParams,
    pub backward: LstmParams,
    pub proj_weight: Matrix,
    pub proj_bias: Vec<f64>,
    pub crf: CrfParams,
}

impl Gradients {
    fn dense_slices(&self) -> impl Iterator<Item = &[f64]> {
        self.forward
            .slices()
            .chain(self.backward.slices())
            .chain([self.proj_weight.as_slice(), self.proj_bias.as_slice()])
            .chain(self.crf.slices())
    }

    fn dense_slices_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        let [a, b, c] = self.crf.slices_mut();
        self.forward
            .slices_mut()
            .chain(self.backward.slices_mut())
            .chain([self.proj_weight.as_mut_slice(), self.proj_bias.as_mut_slice(), a, b, c])
    }

    pub fn l2_norm(&self) -> f64 {
        let sq: f64 = self
            .embeddings
            .values()
            .map(Vec::as_slice)
            .chain(self.dense_slices())
            .flat_map(|s| s.iter())
            .map(|x| x * x)
            .sum();
        sq.sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for row in self.embeddings.values_mut() {
            row.iter_mut().for_each(|x| *x *= factor);
        }
        for s in self.dense_slices_mut() {
            s.iter_mut().for_each(|x| *x *= factor);
        }
    }

    /// Flatten in the same order as [`TaggerModel::flat_params`], with zero
    /// for embedding rows absent from the sentence.
    pub fn flatten(&self, vocab_size: usize, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; vocab_size * dim];
        for (&row, g) in &self.embeddings {
            out[row * dim..(row + 1) * dim].copy_from_slice(g);
        }
        for s in self.dense_slices() {
            out.extend_from_slice(s);
        }
        out
    }
}

impl Network {
    /// Glorot-uniform LSTM, projection and transition matrices drawn from
    /// `rng` in that order (forward LSTM, backward LSTM, projection,
    /// transitions). Biases, start and end scores are zero; forget-gate
    /// biases are 1.
    pub fn init(embeddings: EmbeddingMatrix, hidden: usize, num_tags: usize, rng: &mut Lcg64) -> Self {
        let d = embeddings.dim();
        let forward = LstmParams::init(d, hidden, rng);
        let backward = LstmParams::init(d, hidden, rng);
        let mut proj_weight = Matrix::zeros(num_tags, 2 * hidden);
        glorot_fill(&mut proj_weight, rng);
        let mut crf = CrfParams::zeros(num_tags);
        glorot_fill(&mut crf.transitions, rng);
        Network {
            embeddings,
            forward,
            backward,
            proj_weight,
            proj_bias: vec![0.0; num_tags],
            crf,
        }
    }

    pub fn num_tags(&self) -> usize {
        self.proj_bias.len()
    }

    /// Check the dimension chain `d → h + h → 2h → T`.
    pub fn validate(&self) -> Result<()> {
        let d = self.embeddings.dim();
        let h = self.forward.hidden_dim();
        let n = self.num_tags();
        let ok = self.forward.input_dim() == d
            && self.backward.input_dim() == d
            && self.backward.hidden_dim() == h
            && self.proj_weight.rows() == n
            && self.proj_weight.cols() == 2 * h
            && self.crf.num_tags() == n;
        if !ok {
            return Err(Error::Shape("inconsistent network dimensions".into()));
        }
        Ok(())
    }

    fn project(&self, encoded: &Matrix) -> Matrix {
        super::emission_scores(encoded, &self.proj_weight, &self.proj_bias).expect("validated network dimensions")
    }

    /// `L × T` emission scores for a sentence of vocabulary indices.
    pub fn emissions(&self, indices: &[usize]) -> Matrix {
        let rows: Vec<&[f64]> = indices.iter().map(|&i| self.embeddings.row(i)).collect();
        let (encoded, _) = encode_rows(&rows, &self.forward, &self.backward);
        self.project(&encoded)
    }

    pub fn loss(&self, indices: &[usize], gold: &[usize]) -> Result<f64> {
        nll_loss(&self.emissions(indices), &self.crf, gold)
    }

    /// Loss and exact gradient for one sentence.
    pub fn gradients(&self, indices: &[usize], gold: &[usize]) -> Result<(f64, Gradients)> {
        if indices.is_empty() {
            return Err(Error::InvalidArgument("cannot differentiate an empty sentence".into()));
        }
        if indices.len() != gold.len() {
            return Err(Error::LengthMismatch(format!("{} tokens, {} gold tags", indices.len(), gold.len())));
        }
        let len = indices.len();
        let (d, h, n) = (self.embeddings.dim(), self.forward.hidden_dim(), self.num_tags());
        let rows: Vec<&[f64]> = indices.iter().map(|&i| self.embeddings.row(i)).collect();
        let (encoded, cache) = encode_rows(&rows, &self.forward, &self.backward);
        let emissions = self.project(&encoded);
        let (loss, d_emit, d_crf) = nll_with_gradient(&emissions, &self.crf, gold)?;

        let mut proj_weight = Matrix::zeros(n, 2 * h);
        let mut proj_bias = vec![0.0; n];
        let mut dh_fwd = vec![vec![0.0; h]; len];
        let mut dh_bwd = vec![vec![0.0; h]; len];
        for t in 0..len {
            let de = d_emit.row(t);
            proj_weight.add_outer(de, encoded.row(t));
            axpy(1.0, de, &mut proj_bias);
            let mut d_enc = vec![0.0; 2 * h];
            self.proj_weight.mul_t_vec_add(de, &mut d_enc);
            dh_fwd[t].copy_from_slice(&d_enc[..h]);
            // backward direction runs over the reversed sentence
            dh_bwd[len - 1 - t].copy_from_slice(&d_enc[h..]);
        }

        let mut forward = LstmParams::zeros(d, h);
        let mut backward = LstmParams::zeros(d, h);
        let mut dx = vec![vec![0.0; d]; len];
        backprop(&rows, &cache.fwd, &dh_fwd, &self.forward, &mut forward, &mut dx);
        let reversed: Vec<&[f64]> = rows.iter().rev().copied().collect();
        let mut dx_rev = vec![vec![0.0; d]; len];
        backprop(&reversed, &cache.bwd, &dh_bwd, &self.backward, &mut backward, &mut dx_rev);

        let mut embeddings: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for t in 0..len {
            let row = embeddings.entry(indices[t]).or_insert_with(|| vec![0.0; d]);
            axpy(1.0, &dx[t], row);
            axpy(1.0, &dx_rev[len - 1 - t], row);
        }

        Ok((
            loss,
            Gradients {
                embeddings,
                forward,
                backward,
                proj_weight,
                proj_bias,
                crf: d_crf,
            },
        ))
    }

    /// `θ ← θ − rate · g`.
    pub fn apply_gradients(&mut self, grads: &Gradients, rate: f64) {
        let emb = self.embeddings.matrix_mut();
        for (&row, g) in &grads.embeddings {
            axpy(-rate, g, emb.row_mut(row));
        }
        for (p, g) in self.dense_slices_mut().zip(grads.dense_slices()) {
            axpy(-rate, g, p);
        }
    }

    fn dense_slices(&self) -> impl Iterator<Item = &[f64]> {
        self.forward
            .slices()
            .chain(self.backward.slices())
            .chain([self.proj_weight.as_slice(), self.proj_bias.as_slice()])
            .chain(self.crf.slices())
    }

    fn dense_slices_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        let [a, b, c] = self.crf.slices_mut();
        self.forward
            .slices_mut()
            .chain(self.backward.slices_mut())
            .chain([self.proj_weight.as_mut_slice(), self.proj_bias.as_mut_slice(), a, b, c])
    }

    /// All trainable values: embeddings, forward LSTM, backward LSTM
    /// (each: input matrices, recurrent matrices, biases), projection
    /// weight and bias, transitions, start, end.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = self.embeddings.matrix().as_slice().to_vec();
        for s in self.dense_slices() {
            out.extend_from_slice(s);
        }
        out
    }

    /// Inverse of [`Network::flat_params`].
    pub fn set_flat_params(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.flat_params().len() {
            return Err(Error::Shape("flat parameter vector has wrong length".into()));
        }
        let emb = self.embeddings.matrix_mut().as_mut_slice();
        let (head, mut rest) = values.split_at(emb.len());
        emb.copy_from_slice(head);
        for s in self.dense_slices_mut() {
            let (head, tail) = rest.split_at(s.len());
            s.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }
}

impl TaggerModel {
    /// Fresh model over the 13-tag set. Embeddings come from `embeddings`
    /// when given (its shape must match), otherwise from [`random_init`]
    /// with `config.seed`. The rest comes from [`Network::init`] with a
    /// stream seeded by [`TrainConfig::param_seed`].
    pub fn init(
        vocab: Vocabulary,
        config: TrainConfig,
        embeddings: Option<EmbeddingMatrix>,
        stemmer: Option<StemRuleTable>,
    ) -> Result<Self> {
        config.validate()?;
        let d = config.embedding_dim;
        let embeddings = match embeddings {
            Some(e) => {
                if e.vocab_size() != vocab.len() || e.dim() != d {
                    return Err(Error::Shape(format!(
                        "embeddings are {}×{}, expected {}×{d}",
                        e.vocab_size(),
                        e.dim(),
                        vocab.len()
                    )));
                }
                e
            }
            None => random_init(vocab.len(), d, config.seed, config.embedding_scale),
        };
        let tagset = TagSet::default();
        let mut rng = Lcg64::new(config.param_seed());
        let network = Network::init(embeddings, config.hidden_size, tagset.len(), &mut rng);
        Ok(TaggerModel {
            network,
            tagset,
            vocab,
            stemmer,
            config,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        if self.network.embeddings.vocab_size() != self.vocab.len() || self.network.num_tags() != self.tagset.len() {
            return Err(Error::Shape("model does not match its vocabulary or tag set".into()));
        }
        Ok(())
    }

    /// Vocabulary indices for `tokens`, stemming first if configured.
    pub fn token_indices<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens
            .iter()
            .map(|t| match &self.stemmer {
                Some(rules) => self.vocab.lookup(&stem(t.as_ref(), rules)),
                None => self.vocab.lookup(t.as_ref()),
            })
            .collect()
    }

    /// Tag a token sequence; out-of-vocabulary tokens use UNK. Decoding
    /// forbids IOB-invalid transitions, so output always validates.
    pub fn tag<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<Tag> {
        if tokens.is_empty() {
            return Vec::new();
        }
        let emissions = self.network.emissions(&self.token_indices(tokens));
        decode_tags(&emissions, &self.network.crf, &self.tagset).expect("emission width matches the tag set")
    }

    pub fn tag_strings<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<String> {
        self.tag(tokens).iter().map(Tag::to_string).collect()
    }
}
