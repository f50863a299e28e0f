use std::fmt;

use crate::corpus::AnnotatedSentence;
use crate::error::{Error, Result};
use crate::rng::Lcg64;

use super::model::{TaggerModel, TrainConfig};

/// Summary of one training epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    /// 1-based.
    pub epoch: usize,
    /// Mean per-sentence loss, each measured just before that sentence's update.
    pub train_loss: f64,
    /// Token accuracy of masked decoding on the dev set; `None` if it is empty.
    pub dev_accuracy: Option<f64>,
}

impl fmt::Display for EpochLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "epoch {} loss {:.6} dev_acc ", self.epoch, self.train_loss)?;
        match self.dev_accuracy {
            Some(a) => write!(f, "{a:.6}"),
            None => f.write_str("nan"),
        }
    }
}

/// Fraction of tokens whose decoded tag equals the gold tag.
pub fn token_accuracy(model: &TaggerModel, sentences: &[AnnotatedSentence]) -> Option<f64> {
    let mut correct = 0usize;
    let mut total = 0usize;
    for s in sentences {
        let pred = model.tag(&s.tokens);
        correct += pred.iter().zip(&s.tags).filter(|(p, g)| p == g).count();
        total += s.len();
    }
    (total > 0).then(|| correct as f64 / total as f64)
}

/// Per-sentence gradient descent with global-norm clipping.
///
/// Each epoch visits the training sentences in order, or in a fresh
/// permutation from a stream seeded with [`TrainConfig::shuffle_seed`] when
/// `config.shuffle` is set. `on_epoch` is called after every epoch.
pub fn train<F>(
    mut model: TaggerModel,
    train_set: &[AnnotatedSentence],
    dev_set: &[AnnotatedSentence],
    config: &TrainConfig,
    mut on_epoch: F,
) -> Result<(TaggerModel, Vec<EpochLog>)>
where
    F: FnMut(&EpochLog),
{
    config.validate()?;
    if config.epochs == 0 {
        return Ok((model, Vec::new()));
    }
    if train_set.is_empty() {
        return Err(Error::InvalidArgument("training set is empty".into()));
    }
    let encoded: Vec<(Vec<usize>, Vec<usize>)> = train_set
        .iter()
        .map(|s| {
            let gold = s.tags.iter().map(|&t| model.tagset.index_of(t)).collect();
            (model.token_indices(&s.tokens), gold)
        })
        .collect();

    let mut rng = Lcg64::new(config.shuffle_seed());
    let mut order: Vec<usize> = (0..encoded.len()).collect();
    let mut logs = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        if config.shuffle {
            rng.shuffle(&mut order);
        }
        let mut total = 0.0;
        for &i in &order {
            let (tokens, gold) = &encoded[i];
            let (loss, mut grads) = model.network.gradients(tokens, gold)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { sentence: i });
            }
            let norm = grads.l2_norm();
            if !norm.is_finite() {
                return Err(Error::NonFiniteLoss { sentence: i });
            }
            if norm > config.clip {
                grads.scale(config.clip / norm);
            }
            model.network.apply_gradients(&grads, config.learning_rate);
            total += loss;
        }
        let log = EpochLog {
            epoch,
            train_loss: total / encoded.len() as f64,
            dev_accuracy: token_accuracy(&model, dev_set),
        };
        on_epoch(&log);
        logs.push(log);
    }
    Ok((model, logs))
}
