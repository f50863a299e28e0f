//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use hazardtag::corpus::{split_corpus, AnnotatedSentence};
use hazardtag::eval::{confusion_matrix, entity_metrics, token_metrics};
use hazardtag::extraction::{decode_spans, encode_spans, fill_template, EntitySpan};
use hazardtag::features::{build_vocab, random_init};
use hazardtag::linalg::Matrix;
use hazardtag::rng::Lcg64;
use hazardtag::synthetic;
use hazardtag::tagger::{
    crf_log_partition, train, viterbi_decode, write_model, CrfParams, Network, TaggerModel, TrainConfig,
};
use hazardtag::tags::{EntityLabel, Tag, TagSet};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------- CRF enumeration oracle ----------

struct Instance {
    emissions: Matrix,
    crf: CrfParams,
}

fn random_instance(rng: &mut Lcg64, integer: bool) -> Instance {
    let len = 1 + rng.below(4);
    let n = 1 + rng.below(4);
    let mut draw = || {
        if integer {
            rng.below(3) as f64 - 1.0
        } else {
            rng.uniform(2.0)
        }
    };
    let emissions = Matrix::from_vec(len, n, (0..len * n).map(|_| draw()).collect());
    let mut crf = CrfParams::zeros(n);
    for s in crf.slices_mut() {
        for v in s.iter_mut() {
            *v = draw();
        }
    }
    Instance { emissions, crf }
}

fn all_paths(len: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..n).map(move |t| {
                    let mut q = p.clone();
                    q.push(t);
                    q
                })
            })
            .collect();
    }
    out
}

fn path_score(inst: &Instance, y: &[usize]) -> f64 {
    let [trans, start, end] = inst.crf.slices();
    let n = inst.crf.num_tags();
    let mut s = start[y[0]] + end[y[y.len() - 1]];
    for (i, &t) in y.iter().enumerate() {
        s += inst.emissions.get(i, t);
        if i > 0 {
            s += trans[y[i - 1] * n + t];
        }
    }
    s
}

/// Lowest-index backtracking picks, among maximizers, the one smallest
/// when compared from the last position backwards.
fn oracle_argmax(inst: &Instance, paths: &[Vec<usize>]) -> Vec<usize> {
    let mut best: Option<(f64, &Vec<usize>)> = None;
    for p in paths {
        let s = path_score(inst, p);
        let better = match best {
            None => true,
            Some((bs, bp)) => s > bs || (s == bs && p.iter().rev().lt(bp.iter().rev())),
        };
        if better {
            best = Some((s, p));
        }
    }
    best.unwrap().1.clone()
}

fn instances() -> Vec<Instance> {
    let mut rng = Lcg64::new(2024);
    (0..50).map(|i| random_instance(&mut rng, i % 2 == 1)).collect()
}

fn criterion_1() -> Outcome {
    let mut worst = 0.0f64;
    let mut mismatches = 0;
    let mut ties = 0;
    for inst in instances() {
        let paths = all_paths(inst.emissions.rows(), inst.crf.num_tags());
        let scores: Vec<f64> = paths.iter().map(|p| path_score(&inst, p)).collect();
        let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let oracle = m + scores.iter().map(|s| (s - m).exp()).sum::<f64>().ln();
        let log_z = crf_log_partition(&inst.emissions, &inst.crf).map_err(|e| e.to_string())?;
        worst = worst.max((log_z - oracle).abs() / oracle.abs().max(1e-300));
        if scores.iter().filter(|&&s| s == m).count() > 1 {
            ties += 1;
        }
        let (path, _) = viterbi_decode(&inst.emissions, &inst.crf).map_err(|e| e.to_string())?;
        if path != oracle_argmax(&inst, &paths) {
            mismatches += 1;
        }
    }
    check(
        worst <= 1e-10 && mismatches == 0,
        format!("50 instances, max rel err log Z {worst:.2e} (≤ 1e-10), Viterbi mismatches {mismatches} ({ties} tied)"),
    )
}

fn criterion_3() -> Outcome {
    let mut worst = 0.0f64;
    for inst in instances() {
        let log_z = crf_log_partition(&inst.emissions, &inst.crf).map_err(|e| e.to_string())?;
        let total: f64 = all_paths(inst.emissions.rows(), inst.crf.num_tags())
            .iter()
            .map(|p| (path_score(&inst, p) - log_z).exp())
            .sum();
        worst = worst.max((total - 1.0).abs());
    }
    check(worst <= 1e-8, format!("max |Σp − 1| = {worst:.2e} (≤ 1e-8)"))
}

// ---------- gradient check ----------

fn criterion_2() -> Outcome {
    const STEP: f64 = 1e-5;
    // below this magnitude central differences are roundoff-bound
    const FLOOR: f64 = 1e-6;
    let (vocab, d, h, tags, len) = (7, 4, 3, 4, 3);
    let mut worst = 0.0f64;
    let mut entries = 0;
    for seed in 100..120u64 {
        let mut rng = Lcg64::new(seed);
        let mut net = Network::init(random_init(vocab, d, seed, 0.5), h, tags, &mut rng);
        let base: Vec<f64> = net.flat_params().iter().map(|_| rng.uniform(0.8)).collect();
        net.set_flat_params(&base).map_err(|e| e.to_string())?;
        let tokens: Vec<usize> = (0..len).map(|_| 1 + rng.below(vocab - 1)).collect();
        let gold: Vec<usize> = (0..len).map(|_| rng.below(tags)).collect();
        let (_, grads) = net.gradients(&tokens, &gold).map_err(|e| e.to_string())?;
        let analytic = grads.flatten(vocab, d);
        let mut probe = base.clone();
        for k in 0..base.len() {
            probe[k] = base[k] + STEP;
            net.set_flat_params(&probe).unwrap();
            let plus = net.loss(&tokens, &gold).unwrap();
            probe[k] = base[k] - STEP;
            net.set_flat_params(&probe).unwrap();
            let minus = net.loss(&tokens, &gold).unwrap();
            probe[k] = base[k];
            let numeric = (plus - minus) / (2.0 * STEP);
            let err = (analytic[k] - numeric).abs() / analytic[k].abs().max(numeric.abs()).max(FLOOR);
            worst = worst.max(err);
            entries += 1;
        }
    }
    check(worst < 1e-4, format!("20 models, {entries} entries, max rel err {worst:.2e} (< 1e-4)"))
}

// ---------- worked example ----------

const EXAMPLE_TOKENS: [&str; 9] = ["حجز", "أكثر", "من", "قنطار", "من", "اللحم", "الحمراء", "في", "سطيف"];
const EXAMPLE_TAGS: [&str; 9] = ["O", "O", "O", "B-QUANT", "O", "B-EVENT", "I-EVENT", "O", "B-LOC"];

fn example_spans() -> Vec<EntitySpan> {
    let s = AnnotatedSentence::new(EXAMPLE_TOKENS.iter().map(|t| t.to_string()).collect(), &EXAMPLE_TAGS, None).unwrap();
    decode_spans(&s.tokens, &s.tags).unwrap()
}

fn criterion_4() -> Outcome {
    let spans = example_spans();
    let got: Vec<(EntityLabel, usize, usize)> = spans.iter().map(|s| (s.label, s.start, s.end)).collect();
    let want = vec![
        (EntityLabel::Quantity, 3, 3),
        (EntityLabel::Event, 5, 6),
        (EntityLabel::Location, 8, 8),
    ];
    let e = fill_template(&spans, None);
    let ok = got == want
        && e.quantity.as_deref() == Some("قنطار")
        && e.hazard_type.as_deref() == Some("اللحم الحمراء")
        && e.location.as_deref() == Some("سطيف");
    check(
        ok,
        format!(
            "spans {:?}; quantity {:?} hazard_type {:?} location {:?}",
            got, e.quantity, e.hazard_type, e.location
        ),
    )
}

// ---------- synthetic benchmark ----------

struct Benchmark {
    dev_accuracy: f64,
    dev_entity_f1: f64,
    test_entity_f1: f64,
    epochs: usize,
    elapsed: Duration,
    model_text: String,
    log: String,
}

fn entity_f1(model: &TaggerModel, set: &[AnnotatedSentence]) -> f64 {
    let gold: Vec<Vec<EntitySpan>> = set.iter().map(|s| decode_spans(&s.tokens, &s.tags).unwrap()).collect();
    let pred: Vec<Vec<EntitySpan>> = set
        .iter()
        .map(|s| decode_spans(&s.tokens, &model.tag(&s.tokens)).unwrap())
        .collect();
    entity_metrics(&gold, &pred).unwrap().f1
}

fn run_benchmark() -> Result<Benchmark, String> {
    let start = Instant::now();
    let corpus = synthetic::generate(300, 7);
    let config = TrainConfig {
        epochs: 30,
        ..TrainConfig::default()
    };
    let split = split_corpus(&corpus, [0.8, 0.1, 0.1], config.seed).map_err(|e| e.to_string())?;
    let vocab = build_vocab(split.train.iter().map(|s| s.tokens.iter()), 1);
    let model = TaggerModel::init(vocab, config.clone(), None, None).map_err(|e| e.to_string())?;
    let mut log = String::new();
    let (model, logs) = train(model, &split.train, &split.dev, &config, |l| {
        log.push_str(&format!("{l}\n"));
    })
    .map_err(|e| e.to_string())?;
    let last = logs.last().ok_or("no epochs ran")?;
    Ok(Benchmark {
        dev_accuracy: last.dev_accuracy.ok_or("empty dev set")?,
        dev_entity_f1: entity_f1(&model, &split.dev),
        test_entity_f1: entity_f1(&model, &split.test),
        epochs: logs.len(),
        elapsed: start.elapsed(),
        model_text: write_model(&model).map_err(|e| e.to_string())?,
        log,
    })
}

fn criterion_5() -> Outcome {
    let a = run_benchmark()?;
    let b = run_benchmark()?;
    let reproducible = a.model_text == b.model_text && a.log == b.log;
    check(
        a.dev_accuracy >= 0.95
            && a.dev_entity_f1 >= 0.90
            && a.test_entity_f1 >= 0.90
            && a.elapsed <= Duration::from_secs(120)
            && a.epochs <= 30
            && reproducible,
        format!(
            "{} epochs in {:.1}s (≤ 120s), dev acc {:.4} (≥ 0.95), entity F1 dev {:.4} test {:.4} (≥ 0.90), reproducible {}",
            a.epochs,
            a.elapsed.as_secs_f64(),
            a.dev_accuracy,
            a.dev_entity_f1,
            a.test_entity_f1,
            reproducible
        ),
    )
}

// ---------- IOB round trip ----------

fn random_valid_tags(rng: &mut Lcg64) -> Vec<Tag> {
    let len = rng.below(31);
    let mut tags: Vec<Tag> = Vec::with_capacity(len);
    while tags.len() < len {
        let label = EntityLabel::ALL[rng.below(6)];
        match rng.below(3) {
            0 => tags.push(Tag::Outside),
            1 => tags.push(Tag::Begin(label)),
            _ => match tags.last().and_then(|t| t.label()) {
                Some(l) => tags.push(Tag::Inside(l)),
                None => tags.push(Tag::Begin(label)),
            },
        }
    }
    tags
}

fn is_valid(tags: &[Tag]) -> bool {
    tags.iter()
        .enumerate()
        .all(|(i, t)| t.may_follow(if i == 0 { None } else { Some(tags[i - 1]) }))
}

fn criterion_6() -> Outcome {
    let mut rng = Lcg64::new(6);
    let tagset = TagSet::default();
    let mut failures = 0;
    for _ in 0..1000 {
        let tags = random_valid_tags(&mut rng);
        let tokens: Vec<String> = (0..tags.len()).map(|i| format!("w{i}")).collect();
        let spans = decode_spans(&tokens, &tags).map_err(|e| e.to_string())?;
        let disjoint = spans.windows(2).all(|w| w[0].end < w[1].start);
        let back = encode_spans(&spans, tags.len()).map_err(|e| e.to_string())?;
        if !is_valid(&tags) || back != tags || !disjoint {
            failures += 1;
        }
    }
    let mut invalid_ok = 0;
    for _ in 0..1000 {
        let len = rng.below(31);
        let tags: Vec<Tag> = (0..len).map(|_| tagset.tag(rng.below(tagset.len()))).collect();
        let tokens: Vec<String> = (0..len).map(|i| format!("w{i}")).collect();
        let spans = decode_spans(&tokens, &tags).map_err(|e| e.to_string())?;
        let ok = spans.windows(2).all(|w| w[0].end < w[1].start)
            && spans.iter().all(|s| s.start <= s.end && s.end < len)
            && is_valid(&encode_spans(&spans, len).map_err(|e| e.to_string())?);
        if ok {
            invalid_ok += 1;
        }
    }
    check(
        failures == 0 && invalid_ok == 1000,
        format!("1000 valid sequences round-trip with {failures} failures; {invalid_ok}/1000 arbitrary sequences decode to valid disjoint spans"),
    )
}

// ---------- metric spot values ----------

fn criterion_7() -> Outcome {
    let loc = Tag::Begin(EntityLabel::Location);
    let gold = vec![vec![loc, loc, loc, Tag::Outside]];
    let pred = vec![vec![loc, loc, Tag::Outside, loc]];
    let cm = confusion_matrix(&gold, &pred).map_err(|e| e.to_string())?;
    let m = token_metrics(&cm).map_err(|e| e.to_string())?;
    let c = m.per_class.iter().find(|c| c.tag == loc).ok_or("no B-LOC row")?;
    let third = 2.0 / 3.0;
    let token_ok = (c.tp, c.fp, c.fn_) == (2, 1, 1) && c.precision == third && c.recall == third && c.f1 == third;

    let gold_spans = example_spans();
    let pred_spans: Vec<EntitySpan> = gold_spans[..2].to_vec();
    let e = entity_metrics(&[gold_spans], &[pred_spans]).map_err(|e| e.to_string())?;
    let entity_ok = e.precision == 1.0 && e.recall == third && e.f1 == 0.8;
    check(
        token_ok && entity_ok,
        format!(
            "TP/FP/FN {}/{}/{} → P {} R {} F1 {}; entity P {} R {} F1 {}",
            c.tp, c.fp, c.fn_, c.precision, c.recall, c.f1, e.precision, e.recall, e.f1
        ),
    )
}

// ---------- end-to-end determinism ----------

const ARTIFACTS: [&str; 8] = [
    "sentences.jsonl",
    "model.txt",
    "train.log",
    "tags.jsonl",
    "events.jsonl",
    "test.jsonl",
    "pred.jsonl",
    "metrics.json",
];

fn bin(dir: &Path, args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_hazardtag"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{} failed: {}", args[0], String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

fn pipeline(dir: &Path) -> Result<Vec<Vec<u8>>, String> {
    let corpus = synthetic::generate(120, 5);
    let docs: String = corpus
        .chunks(6)
        .enumerate()
        .map(|(i, chunk)| {
            let text: Vec<String> = chunk.iter().map(|s| s.tokens.join(" ")).collect();
            let doc = serde_json::json!({"id": format!("doc-{i}"), "text": text.join("\n"), "source": "website"});
            format!("{doc}\n")
        })
        .collect();
    fs::write(dir.join("docs.jsonl"), docs).map_err(|e| e.to_string())?;
    let mut stdout = Vec::new();
    stdout.extend(bin(dir, &["synth", "--out", "corpus.jsonl", "--count", "120", "--seed", "5"])?);
    stdout.extend(bin(dir, &["prepare", "--in", "docs.jsonl", "--out", "sentences.jsonl"])?);
    fs::write(
        dir.join("run.cfg"),
        "corpus = corpus.jsonl\nmodel = model.txt\nlog = train.log\ntest_out = test.jsonl\nepochs = 3\nseed = 13\nhidden_size = 16\nembedding_dim = 20\n",
    )
    .map_err(|e| e.to_string())?;
    stdout.extend(bin(dir, &["train", "--config", "run.cfg"])?);
    stdout.extend(bin(dir, &["tag", "--model", "model.txt", "--in", "sentences.jsonl", "--out", "tags.jsonl"])?);
    stdout.extend(bin(dir, &["extract", "--model", "model.txt", "--in", "sentences.jsonl", "--out", "events.jsonl"])?);
    stdout.extend(bin(dir, &["tag", "--model", "model.txt", "--in", "test.jsonl", "--out", "pred.jsonl"])?);
    stdout.extend(bin(dir, &["eval", "--gold", "test.jsonl", "--pred", "pred.jsonl", "--out", "metrics.json"])?);
    let mut files: Vec<Vec<u8>> = ARTIFACTS
        .iter()
        .map(|f| fs::read(dir.join(f)).map_err(|e| format!("{f}: {e}")))
        .collect::<Result<_, _>>()?;
    files.push(stdout);
    Ok(files)
}

fn criterion_8() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = pipeline(a.path())?;
    let second = pipeline(b.path())?;
    let differing: Vec<&str> = ARTIFACTS
        .iter()
        .chain(["stdout"].iter())
        .zip(first.iter().zip(&second))
        .filter(|(_, (x, y))| x != y)
        .map(|(name, _)| *name)
        .collect();
    let nonempty = first.iter().all(|f| !f.is_empty());
    check(
        differing.is_empty() && nonempty,
        format!(
            "prepare→train→tag→extract→eval twice: {} artifacts compared, differing {:?}",
            ARTIFACTS.len() + 1,
            differing
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("CRF oracle equivalence", criterion_1),
        ("gradient check", criterion_2),
        ("normalization", criterion_3),
        ("worked-example pipeline", criterion_4),
        ("synthetic training benchmark", criterion_5),
        ("IOB round trip", criterion_6),
        ("metric spot values", criterion_7),
        ("end-to-end determinism", criterion_8),
    ];
    let started = Instant::now();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS  {}. {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {}. {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1}s",
        criteria.len() - failed,
        criteria.len(),
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
