//! Confusion matrix and token- and entity-level precision, recall, F1.
//!
//! Every ratio with a zero denominator is defined as 0.

use std::collections::HashSet;
use std::fmt;

use serde_json::{Map, Value};

use crate::corpus::AnnotatedSentence;
use crate::error::{Error, Result};
use crate::extraction::{decode_spans, EntitySpan};
use crate::tags::{Tag, TagSet};

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Rows are gold tags, columns predicted tags, both in tag-set order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    tagset: TagSet,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(tagset: TagSet) -> Self {
        let n = tagset.len();
        ConfusionMatrix {
            tagset,
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn from_counts(tagset: TagSet, counts: Vec<Vec<u64>>) -> Result<Self> {
        let n = tagset.len();
        if counts.len() != n || counts.iter().any(|r| r.len() != n) {
            return Err(Error::Shape(format!("confusion matrix must be {n}×{n}")));
        }
        Ok(ConfusionMatrix { tagset, counts })
    }

    pub fn tagset(&self) -> &TagSet {
        &self.tagset
    }

    pub fn get(&self, gold: Tag, pred: Tag) -> u64 {
        self.counts[self.tagset.index_of(gold)][self.tagset.index_of(pred)]
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn add(&mut self, gold: Tag, pred: Tag) {
        self.counts[self.tagset.index_of(gold)][self.tagset.index_of(pred)] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn is_diagonal(&self) -> bool {
        self.counts
            .iter()
            .enumerate()
            .all(|(i, row)| row.iter().enumerate().all(|(j, &c)| i == j || c == 0))
    }
}

pub fn confusion_matrix(gold: &[Vec<Tag>], pred: &[Vec<Tag>]) -> Result<ConfusionMatrix> {
    if gold.len() != pred.len() {
        return Err(Error::LengthMismatch(format!(
            "{} gold sentences, {} predicted",
            gold.len(),
            pred.len()
        )));
    }
    let mut cm = ConfusionMatrix::new(TagSet::default());
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.len() != p.len() {
            return Err(Error::LengthMismatch(format!(
                "sentence {i}: {} gold tags, {} predicted",
                g.len(),
                p.len()
            )));
        }
        for (&gt, &pt) in g.iter().zip(p) {
            cm.add(gt, pt);
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassMetrics {
    pub tag: Tag,
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ClassMetrics {
    /// Whether the class occurs in gold or predictions at all.
    pub fn has_support(&self) -> bool {
        self.tp + self.fp + self.fn_ > 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TokenMetrics {
    pub per_class: Vec<ClassMetrics>,
    /// Means over the non-`O` classes that occur in gold or predictions.
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub tokens: u64,
}

pub fn token_metrics(cm: &ConfusionMatrix) -> Result<TokenMetrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::InvalidArgument("confusion matrix is empty".into()));
    }
    let n = cm.counts.len();
    let per_class: Vec<ClassMetrics> = (0..n)
        .map(|c| {
            let tp = cm.counts[c][c];
            let predicted: u64 = (0..n).map(|g| cm.counts[g][c]).sum();
            let actual: u64 = cm.counts[c].iter().sum();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, actual);
            ClassMetrics {
                tag: cm.tagset.tag(c),
                tp,
                fp: predicted - tp,
                fn_: actual - tp,
                precision,
                recall,
                f1: f1(precision, recall),
            }
        })
        .collect();
    let active: Vec<&ClassMetrics> = per_class
        .iter()
        .filter(|m| m.tag != Tag::Outside && m.has_support())
        .collect();
    let mean = |f: fn(&ClassMetrics) -> f64| {
        if active.is_empty() {
            0.0
        } else {
            active.iter().map(|m| f(m)).sum::<f64>() / active.len() as f64
        }
    };
    Ok(TokenMetrics {
        macro_precision: mean(|m| m.precision),
        macro_recall: mean(|m| m.recall),
        macro_f1: mean(|m| m.f1),
        accuracy: ratio(cm.trace(), total),
        tokens: total,
        per_class,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntityMetrics {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Exact-match span scoring, micro-aggregated: a predicted span counts only
/// if the same sentence has a gold span with the same label, start and end.
pub fn entity_metrics(gold: &[Vec<EntitySpan>], pred: &[Vec<EntitySpan>]) -> Result<EntityMetrics> {
    if gold.len() != pred.len() {
        return Err(Error::LengthMismatch(format!(
            "{} gold sentences, {} predicted",
            gold.len(),
            pred.len()
        )));
    }
    let (mut tp, mut n_gold, mut n_pred) = (0u64, 0u64, 0u64);
    for (g, p) in gold.iter().zip(pred) {
        let keys: HashSet<_> = g.iter().map(|s| (s.label, s.start, s.end)).collect();
        tp += p.iter().filter(|s| keys.contains(&(s.label, s.start, s.end))).count() as u64;
        n_gold += g.len() as u64;
        n_pred += p.len() as u64;
    }
    let precision = ratio(tp, n_pred);
    let recall = ratio(tp, n_gold);
    Ok(EntityMetrics {
        tp,
        fp: n_pred - tp,
        fn_: n_gold - tp,
        precision,
        recall,
        f1: f1(precision, recall),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub confusion: ConfusionMatrix,
    pub token: TokenMetrics,
    pub entity: EntityMetrics,
}

/// Score aligned gold and predicted corpora. Sentences must pair up with
/// identical tokens.
pub fn evaluate(gold: &[AnnotatedSentence], pred: &[AnnotatedSentence]) -> Result<MetricsReport> {
    if gold.len() != pred.len() {
        return Err(Error::LengthMismatch(format!(
            "{} gold sentences, {} predicted",
            gold.len(),
            pred.len()
        )));
    }
    if let Some(i) = (0..gold.len()).find(|&i| gold[i].tokens != pred[i].tokens) {
        return Err(Error::LengthMismatch(format!("sentence {i}: gold and predicted tokens differ")));
    }
    let gold_tags: Vec<Vec<Tag>> = gold.iter().map(|s| s.tags.clone()).collect();
    let pred_tags: Vec<Vec<Tag>> = pred.iter().map(|s| s.tags.clone()).collect();
    let confusion = confusion_matrix(&gold_tags, &pred_tags)?;
    let token = token_metrics(&confusion)?;
    let spans = |c: &[AnnotatedSentence]| -> Result<Vec<Vec<EntitySpan>>> {
        c.iter().map(|s| decode_spans(&s.tokens, &s.tags)).collect()
    };
    let entity = entity_metrics(&spans(gold)?, &spans(pred)?)?;
    Ok(MetricsReport {
        confusion,
        token,
        entity,
    })
}

impl MetricsReport {
    /// Flat record. Fixed keys first, then `<TAG>.{precision,recall,f1,tp,fp,fn}`
    /// for each tag that occurs in gold or predictions, in tag-set order.
    pub fn to_record(&self) -> Map<String, Value> {
        let mut m = Map::new();
        let t = &self.token;
        let e = &self.entity;
        m.insert("tokens".into(), t.tokens.into());
        m.insert("token_accuracy".into(), t.accuracy.into());
        m.insert("macro_precision".into(), t.macro_precision.into());
        m.insert("macro_recall".into(), t.macro_recall.into());
        m.insert("macro_f1".into(), t.macro_f1.into());
        m.insert("entity_tp".into(), e.tp.into());
        m.insert("entity_fp".into(), e.fp.into());
        m.insert("entity_fn".into(), e.fn_.into());
        m.insert("entity_precision".into(), e.precision.into());
        m.insert("entity_recall".into(), e.recall.into());
        m.insert("entity_f1".into(), e.f1.into());
        for c in t.per_class.iter().filter(|c| c.has_support()) {
            m.insert(format!("{}.precision", c.tag), c.precision.into());
            m.insert(format!("{}.recall", c.tag), c.recall.into());
            m.insert(format!("{}.f1", c.tag), c.f1.into());
            m.insert(format!("{}.tp", c.tag), c.tp.into());
            m.insert(format!("{}.fp", c.tag), c.fp.into());
            m.insert(format!("{}.fn", c.tag), c.fn_.into());
        }
        m
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10} {:>9} {:>9} {:>9} {:>7} {:>7} {:>7}", "tag", "precision", "recall", "f1", "tp", "fp", "fn")?;
        for c in self.token.per_class.iter().filter(|c| c.has_support()) {
            writeln!(
                f,
                "{:<10} {:>9.4} {:>9.4} {:>9.4} {:>7} {:>7} {:>7}",
                c.tag.to_string(),
                c.precision,
                c.recall,
                c.f1,
                c.tp,
                c.fp,
                c.fn_
            )?;
        }
        let t = &self.token;
        writeln!(f, "{:<10} {:>9.4} {:>9.4} {:>9.4}", "macro", t.macro_precision, t.macro_recall, t.macro_f1)?;
        let e = &self.entity;
        writeln!(
            f,
            "{:<10} {:>9.4} {:>9.4} {:>9.4} {:>7} {:>7} {:>7}",
            "entity", e.precision, e.recall, e.f1, e.tp, e.fp, e.fn_
        )?;
        write!(f, "token accuracy {:.4} over {} tokens", t.accuracy, t.tokens)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tags::EntityLabel;

    fn tags(s: &str) -> Vec<Tag> {
        s.split(' ').map(|t| t.parse().unwrap()).collect()
    }

    #[test]
    fn perfect_prediction_is_diagonal() {
        let g = vec![tags("O B-LOC I-LOC O"), tags("B-QUANT O")];
        let cm = confusion_matrix(&g, &g).unwrap();
        assert!(cm.is_diagonal());
        assert_eq!(cm.total(), 6);
        let m = token_metrics(&cm).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert!(m.per_class.iter().filter(|c| c.has_support()).all(|c| c.f1 == 1.0));
        assert_eq!((m.macro_precision, m.macro_recall, m.macro_f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn direct_tally() {
        let cm = confusion_matrix(&[tags("O B-LOC")], &[tags("O O")]).unwrap();
        assert_eq!(cm.get(Tag::Outside, Tag::Outside), 1);
        assert_eq!(cm.get(Tag::Begin(EntityLabel::Location), Tag::Outside), 1);
        assert_eq!(cm.total(), 2);
    }

    #[test]
    fn mismatch_names_sentence() {
        let err = confusion_matrix(&[tags("O"), tags("O O")], &[tags("O"), tags("O")]).unwrap_err();
        assert!(err.to_string().contains("sentence 1"));
    }

    #[test]
    fn two_thirds_by_hand() {
        // B-LOC: TP=2, FP=1 (gold O), FN=1 (pred O)
        let ts = TagSet::default();
        let mut counts = vec![vec![0; 13]; 13];
        let loc = ts.index_of(Tag::Begin(EntityLabel::Location));
        counts[loc][loc] = 2;
        counts[0][loc] = 1;
        counts[loc][0] = 1;
        counts[0][0] = 5;
        let m = token_metrics(&ConfusionMatrix::from_counts(ts, counts).unwrap()).unwrap();
        let c = &m.per_class[loc];
        assert_eq!((c.tp, c.fp, c.fn_), (2, 1, 1));
        assert_eq!(c.precision, 2.0 / 3.0);
        assert_eq!(c.recall, 2.0 / 3.0);
        assert_eq!(c.f1, 2.0 / 3.0);
        assert_eq!(m.accuracy, 7.0 / 9.0);
    }

    #[test]
    fn absent_class_scores_zero() {
        let cm = confusion_matrix(&[tags("O B-LOC")], &[tags("O B-LOC")]).unwrap();
        let m = token_metrics(&cm).unwrap();
        let pers = &m.per_class[1];
        assert_eq!((pers.precision, pers.recall, pers.f1), (0.0, 0.0, 0.0));
        assert!(!pers.has_support());
    }

    #[test]
    fn empty_matrix_is_an_error() {
        assert!(token_metrics(&ConfusionMatrix::new(TagSet::default())).is_err());
    }

    fn span(label: EntityLabel, start: usize, end: usize) -> EntitySpan {
        EntitySpan {
            label,
            start,
            end,
            text: String::new(),
        }
    }

    #[test]
    fn entity_examples() {
        let gold = vec![vec![
            span(EntityLabel::Quantity, 3, 3),
            span(EntityLabel::Event, 5, 6),
            span(EntityLabel::Location, 8, 8),
        ]];
        let m = entity_metrics(&gold, &gold).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));

        let pred = vec![vec![span(EntityLabel::Quantity, 3, 3), span(EntityLabel::Location, 8, 8)]];
        let m = entity_metrics(&gold, &pred).unwrap();
        assert_eq!((m.tp, m.fp, m.fn_), (2, 0, 1));
        assert_eq!(m.precision, 1.0);
        assert_eq!(m.recall, 2.0 / 3.0);
        assert_eq!(m.f1, 0.8);

        let wrong = vec![vec![span(EntityLabel::Organization, 8, 8)]];
        let m = entity_metrics(&[vec![span(EntityLabel::Location, 8, 8)]], &wrong).unwrap();
        assert_eq!((m.tp, m.fp, m.fn_), (0, 1, 1));
    }

    #[test]
    fn record_has_fixed_prefix() {
        let s = AnnotatedSentence::new(vec!["a".into(), "b".into()], &["O", "B-LOC"], None).unwrap();
        let r = evaluate(std::slice::from_ref(&s), std::slice::from_ref(&s)).unwrap();
        let rec = r.to_record();
        let keys: Vec<&str> = rec.keys().map(String::as_str).take(3).collect();
        assert_eq!(keys, ["tokens", "token_accuracy", "macro_precision"]);
        assert!(rec.contains_key("B-LOC.f1"));
        assert!(!rec.contains_key("B-PERS.f1"));
        assert!(r.to_string().contains("token accuracy 1.0000"));
    }
}
