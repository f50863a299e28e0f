//! `hazardtag` command-line tool.
//!
//! Exit status is 0 on success, 1 on runtime failures (unreadable or
//! mismatched files, training divergence) and 2 on usage or configuration
//! errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "hazardtag", version, about = "Food-hazard event extraction from Arabic text")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Normalize and tokenize raw documents into sentence records.
    Prepare {
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Train a tagger on an annotated corpus.
    Train(Box<TrainArgs>),
    /// Tag sentence records with a trained model.
    Tag {
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Tag sentences and fill one hazard event per sentence with entities.
    /// Without --model the input must already be annotated.
    Extract {
        #[arg(long, value_name = "FILE")]
        model: Option<PathBuf>,
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Score predicted tags against gold tags.
    Eval {
        #[arg(long, value_name = "FILE")]
        gold: PathBuf,
        #[arg(long, value_name = "FILE")]
        pred: PathBuf,
        /// Also write the metrics as one JSON object.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Print model dimensions and, given a corpus, chi-square feature rankings.
    Inspect {
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        /// Annotated corpus to rank features on.
        #[arg(long, value_name = "FILE")]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        top: usize,
        /// Longest n-gram used as a feature.
        #[arg(long, default_value_t = 1)]
        ngram: usize,
    },
    /// Write a synthetic annotated corpus.
    Synth {
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        #[arg(long, default_value_t = 300)]
        count: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

/// `train` options. Flags override values from `--config`.
#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub embeddings: Option<String>,
    #[arg(long)]
    pub stem_rules: Option<String>,
    #[arg(long)]
    pub log: Option<String>,
    #[arg(long)]
    pub test_out: Option<String>,
    #[arg(long)]
    pub split: Option<String>,
    #[arg(long)]
    pub min_freq: Option<String>,
    #[arg(long)]
    pub learning_rate: Option<String>,
    #[arg(long)]
    pub epochs: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub hidden_size: Option<String>,
    #[arg(long)]
    pub embedding_dim: Option<String>,
    #[arg(long)]
    pub clip: Option<String>,
    #[arg(long)]
    pub shuffle: Option<String>,
    #[arg(long)]
    pub embedding_scale: Option<String>,
}

impl TrainArgs {
    fn overrides(&self) -> Vec<(&'static str, &str)> {
        let all = [
            ("corpus", &self.corpus),
            ("model", &self.model),
            ("embeddings", &self.embeddings),
            ("stem_rules", &self.stem_rules),
            ("log", &self.log),
            ("test_out", &self.test_out),
            ("split", &self.split),
            ("min_freq", &self.min_freq),
            ("learning_rate", &self.learning_rate),
            ("epochs", &self.epochs),
            ("seed", &self.seed),
            ("hidden_size", &self.hidden_size),
            ("embedding_dim", &self.embedding_dim),
            ("clip", &self.clip),
            ("shuffle", &self.shuffle),
            ("embedding_scale", &self.embedding_scale),
        ];
        all.into_iter()
            .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
            .collect()
    }
}

/// A failure and the exit status it maps to.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Runtime(e) => e,
        }
    }
}

pub trait OrFail<T> {
    fn usage(self) -> Result<T, Failure>;
    fn runtime(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> OrFail<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }

    fn runtime(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Runtime(e.into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Prepare { input, out } => commands::prepare(input, out),
        Command::Train(args) => commands::train(args.config.as_deref(), &args.overrides()),
        Command::Tag { model, input, out } => commands::tag(model, input, out),
        Command::Extract { model, input, out } => commands::extract(model.as_deref(), input, out),
        Command::Eval { gold, pred, out } => commands::eval(gold, pred, out.as_deref()),
        Command::Inspect {
            model,
            corpus,
            top,
            ngram,
        } => commands::inspect(model, corpus.as_deref(), *top, *ngram),
        Command::Synth { out, count, seed } => commands::synth(out, *count, *seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
