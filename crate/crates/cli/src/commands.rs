use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, Context};
use hazardtag::corpus::{
    load_corpus, load_documents, load_sentences, save_records, split_corpus, AnnotatedSentence, Sentence,
};
use hazardtag::eval::evaluate;
use hazardtag::extraction::{decode_spans, events_to_report, fill_template, HazardEvent};
use hazardtag::features::{build_vocab, chi_square_select, load_pretrained, presence_matrix};
use hazardtag::tagger::{load_model, save_model, train as train_model, TaggerModel};
use hazardtag::tags::EntityLabel;
use hazardtag::text::{ngrams, normalize, split_sentences, stem, StemRuleTable};
use hazardtag::Error;

use crate::config::RunConfig;
use crate::{Failure, OrFail};

type CmdResult = Result<(), Failure>;

fn with_path(e: Error, path: &Path) -> anyhow::Error {
    anyhow!(e).context(path.display().to_string())
}

pub fn prepare(input: &Path, out: &Path) -> CmdResult {
    let docs = load_documents(input).map_err(|e| match e {
        Error::Parse { .. } => Failure::Usage(with_path(e, input)),
        e => Failure::Runtime(with_path(e, input)),
    })?;
    let mut records = Vec::new();
    for doc in &docs {
        for sentence in split_sentences(&normalize(&doc.text)) {
            records.push(Sentence {
                tokens: sentence.into_iter().map(|t| t.surface).collect(),
                doc_id: Some(doc.id.clone()),
            });
        }
    }
    save_records(out, &records).map_err(|e| with_path(e, out)).runtime()?;
    let tokens: usize = records.iter().map(|s| s.tokens.len()).sum();
    println!("documents {} sentences {} tokens {}", docs.len(), records.len(), tokens);
    Ok(())
}

pub fn train(config: Option<&Path>, overrides: &[(&str, &str)]) -> CmdResult {
    let mut cfg = match config {
        Some(p) => RunConfig::load(p).usage()?,
        None => RunConfig::default(),
    };
    for (key, value) in overrides {
        cfg.set(key, value, Path::new("")).with_context(|| format!("--{}", key.replace('_', "-"))).usage()?;
    }
    cfg.validate().usage()?;
    let corpus_path = cfg.corpus.as_deref().expect("validated");
    let model_path = cfg.model.as_deref().expect("validated");

    let stemmer = match &cfg.stem_rules {
        Some(p) => Some(StemRuleTable::load(p).map_err(|e| with_path(e, p)).usage()?),
        None => None,
    };
    let corpus = load_corpus(corpus_path).map_err(|e| with_path(e, corpus_path)).runtime()?;
    let split = split_corpus(&corpus, cfg.split, cfg.train.seed).runtime()?;
    eprintln!(
        "corpus {} sentences: train {} dev {} test {}",
        corpus.len(),
        split.train.len(),
        split.dev.len(),
        split.test.len()
    );

    let vocab = build_vocab(
        split.train.iter().map(|s| {
            s.tokens.iter().map(|t| match &stemmer {
                Some(rules) => stem(t, rules),
                None => t.clone(),
            })
        }),
        cfg.min_freq,
    );
    let embeddings = match &cfg.embeddings {
        Some(p) => Some(
            load_pretrained(p, &vocab, cfg.train.embedding_dim, cfg.train.seed, cfg.train.embedding_scale)
                .map_err(|e| with_path(e, p))
                .runtime()?,
        ),
        None => None,
    };
    eprintln!("vocabulary {} tokens", vocab.len());
    let model = TaggerModel::init(vocab, cfg.train.clone(), embeddings, stemmer).usage()?;

    let mut log = match &cfg.log {
        Some(p) => Some(BufWriter::new(
            File::create(p).with_context(|| p.display().to_string()).runtime()?,
        )),
        None => None,
    };
    let mut log_error: Option<io::Error> = None;
    let (model, _) = train_model(model, &split.train, &split.dev, &cfg.train, |epoch| {
        eprintln!("{epoch}");
        if let (Some(w), None) = (log.as_mut(), log_error.as_ref()) {
            if let Err(e) = writeln!(w, "{epoch}") {
                log_error = Some(e);
            }
        }
    })
    .runtime()?;
    if let Some(e) = log_error {
        return Err(Failure::Runtime(e.into()));
    }
    if let Some(mut w) = log {
        w.flush().runtime()?;
    }

    save_model(&model, model_path).map_err(|e| with_path(e, model_path)).runtime()?;
    if let Some(p) = &cfg.test_out {
        save_records(p, &split.test).map_err(|e| with_path(e, p)).runtime()?;
    }
    Ok(())
}

fn read_model(path: &Path) -> Result<TaggerModel, Failure> {
    load_model(path).map_err(|e| with_path(e, path)).runtime()
}

fn tag_all(model: &TaggerModel, sentences: Vec<Sentence>) -> Vec<AnnotatedSentence> {
    sentences
        .into_iter()
        .map(|s| AnnotatedSentence {
            tags: model.tag(&s.tokens),
            tokens: s.tokens,
            doc_id: s.doc_id,
        })
        .collect()
}

pub fn tag(model: &Path, input: &Path, out: &Path) -> CmdResult {
    let model = read_model(model)?;
    let sentences = load_sentences(input).map_err(|e| with_path(e, input)).runtime()?;
    let tagged = tag_all(&model, sentences);
    save_records(out, &tagged).map_err(|e| with_path(e, out)).runtime()?;
    eprintln!("tagged {} sentences", tagged.len());
    Ok(())
}

pub fn extract(model: Option<&Path>, input: &Path, out: &Path) -> CmdResult {
    let tagged = match model {
        Some(m) => {
            let model = read_model(m)?;
            let sentences = load_sentences(input).map_err(|e| with_path(e, input)).runtime()?;
            tag_all(&model, sentences)
        }
        None => load_corpus(input).map_err(|e| with_path(e, input)).runtime()?,
    };
    let mut events: Vec<HazardEvent> = Vec::new();
    for s in &tagged {
        let spans = decode_spans(&s.tokens, &s.tags).runtime()?;
        if !spans.is_empty() {
            events.push(fill_template(&spans, s.doc_id.as_deref()));
        }
    }
    fs::write(out, events_to_report(&events))
        .with_context(|| out.display().to_string())
        .runtime()?;
    eprintln!("{} events from {} sentences", events.len(), tagged.len());
    Ok(())
}

pub fn eval(gold: &Path, pred: &Path, out: Option<&Path>) -> CmdResult {
    let g = load_corpus(gold).map_err(|e| with_path(e, gold)).runtime()?;
    let p = load_corpus(pred).map_err(|e| with_path(e, pred)).runtime()?;
    let report = evaluate(&g, &p).runtime()?;
    println!("{report}");
    if let Some(path) = out {
        let mut line = serde_json::to_string(&report.to_record()).runtime()?;
        line.push('\n');
        fs::write(path, line).with_context(|| path.display().to_string()).runtime()?;
    }
    Ok(())
}

pub fn inspect(model_path: &Path, corpus: Option<&Path>, top: usize, ngram: usize) -> CmdResult {
    if ngram == 0 {
        return Err(Failure::Usage(anyhow!("--ngram must be ≥ 1")));
    }
    let model = read_model(model_path)?;
    let net = &model.network;
    let c = &model.config;
    println!("vocabulary {} (min_freq {})", model.vocab.len(), model.vocab.min_freq());
    println!("embedding_dim {}", net.embeddings.dim());
    println!("hidden_size {}", net.forward.hidden_dim());
    println!("parameters {}", net.flat_params().len());
    println!("tags {}: {}", model.tagset.len(), model.tagset.names().join(" "));
    match &model.stemmer {
        Some(r) => println!(
            "stemmer {} prefixes {} suffixes min_stem_length {}",
            r.prefixes().len(),
            r.suffixes().len(),
            r.min_stem_length()
        ),
        None => println!("stemmer none"),
    }
    println!(
        "trained with learning_rate {} epochs {} seed {} clip {} shuffle {}",
        c.learning_rate, c.epochs, c.seed, c.clip, c.shuffle
    );

    let Some(path) = corpus else { return Ok(()) };
    let sentences = load_corpus(path).map_err(|e| with_path(e, path)).runtime()?;
    let features: Vec<Vec<String>> = sentences
        .iter()
        .map(|s| {
            let toks: Vec<String> = s
                .tokens
                .iter()
                .map(|t| match &model.stemmer {
                    Some(r) => stem(t, r),
                    None => t.clone(),
                })
                .collect();
            (1..=ngram.min(toks.len())).flat_map(|n| ngrams(&toks, n).expect("n ≥ 1")).collect()
        })
        .collect();
    let (names, presence) = presence_matrix(&features);
    for label in EntityLabel::ALL {
        let labels: Vec<bool> = sentences
            .iter()
            .map(|s| s.tags.iter().any(|t| t.label() == Some(label)))
            .collect();
        let positives = labels.iter().filter(|&&y| y).count();
        if positives == 0 {
            continue;
        }
        println!("\n{} ({positives} of {} sentences)", label.as_str(), sentences.len());
        for f in chi_square_select(&names, &presence, &labels, top).runtime()? {
            println!("  {:>10.4}  {}", f.chi2, f.feature);
        }
    }
    Ok(())
}

pub fn synth(out: &Path, count: usize, seed: u64) -> CmdResult {
    let corpus = hazardtag::synthetic::generate(count, seed);
    save_records(out, &corpus).map_err(|e| with_path(e, out)).runtime()?;
    eprintln!("wrote {} sentences", corpus.len());
    Ok(())
}
