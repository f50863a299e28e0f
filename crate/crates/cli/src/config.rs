//! Flat `key = value` run configuration for `train`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use hazardtag::tagger::TrainConfig;

/// Everything `train` needs. Paths in a config file are relative to the
/// file's directory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub stem_rules: Option<PathBuf>,
    pub log: Option<PathBuf>,
    pub test_out: Option<PathBuf>,
    pub split: [f64; 3],
    pub min_freq: usize,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: None,
            model: None,
            embeddings: None,
            stem_rules: None,
            log: None,
            test_out: None,
            split: [0.8, 0.1, 0.1],
            min_freq: 1,
            train: TrainConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{}:{}: expected key=value", path.display(), i + 1))?;
            cfg.set(key.trim(), value.trim(), base)
                .with_context(|| format!("{}:{}", path.display(), i + 1))?;
        }
        Ok(cfg)
    }

    /// Set one key from its string form. Relative paths are joined to `base`.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        let path = || base.join(value);
        match key {
            "corpus" => self.corpus = Some(path()),
            "model" => self.model = Some(path()),
            "embeddings" => self.embeddings = Some(path()),
            "stem_rules" => self.stem_rules = Some(path()),
            "log" => self.log = Some(path()),
            "test_out" => self.test_out = Some(path()),
            "split" => self.split = parse_split(value)?,
            "min_freq" => self.min_freq = parse(key, value)?,
            "learning_rate" => self.train.learning_rate = parse(key, value)?,
            "epochs" => self.train.epochs = parse(key, value)?,
            "seed" => self.train.seed = parse(key, value)?,
            "hidden_size" => self.train.hidden_size = parse(key, value)?,
            "embedding_dim" => self.train.embedding_dim = parse(key, value)?,
            "clip" => self.train.clip = parse(key, value)?,
            "shuffle" => self.train.shuffle = parse(key, value)?,
            "embedding_scale" => self.train.embedding_scale = parse(key, value)?,
            _ => bail!("unknown key {key:?}"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.corpus.is_none() {
            bail!("missing required key: corpus");
        }
        if self.model.is_none() {
            bail!("missing required key: model");
        }
        if self.min_freq == 0 {
            bail!("min_freq must be ≥ 1");
        }
        self.train.validate()?;
        Ok(())
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| anyhow!("invalid {key} {value:?}: {e}"))
}

pub fn parse_split(value: &str) -> Result<[f64; 3]> {
    let parts: Vec<f64> = value
        .split(',')
        .map(|p| parse("split", p.trim()))
        .collect::<Result<_>>()?;
    let ratios: [f64; 3] = parts
        .try_into()
        .map_err(|_| anyhow!("split needs three comma-separated ratios, got {value:?}"))?;
    if ratios.iter().any(|r| r.is_nan() || *r < 0.0) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
        bail!("split ratios must be non-negative and sum to 1, got {value:?}");
    }
    Ok(ratios)
}
