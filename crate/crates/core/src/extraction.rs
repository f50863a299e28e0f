//! IOB span decoding/encoding and hazard-event template filling.
//!
//! Event records are JSON lines with fields in this order: `doc_id`,
//! `hazard_type`, `location`, `organization`, `person`, `quantity`, `date`,
//! `extras`. Empty slots are `null`; `extras` maps a label (`"LOC"`, ...) to
//! the texts of its spans that did not win the slot, and omits labels with
//! none.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tags::{EntityLabel, Tag};

/// A labelled token range, `start..=end`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EntitySpan {
    pub label: EntityLabel,
    pub start: usize,
    pub end: usize,
    pub text: String,
}

/// Group tags into spans. `B-X I-X*` is one span; an `I-X` that cannot
/// continue the open span starts a new one as if it were `B-X`.
pub fn decode_spans<S: AsRef<str>>(tokens: &[S], tags: &[Tag]) -> Result<Vec<EntitySpan>> {
    if tokens.len() != tags.len() {
        return Err(Error::LengthMismatch(format!("{} tokens, {} tags", tokens.len(), tags.len())));
    }
    let mut ranges: Vec<(EntityLabel, usize, usize)> = Vec::new();
    let mut open = false;
    for (i, tag) in tags.iter().enumerate() {
        match *tag {
            Tag::Outside => open = false,
            Tag::Begin(l) => {
                ranges.push((l, i, i));
                open = true;
            }
            Tag::Inside(l) => match ranges.last_mut() {
                Some((label, _, end)) if open && *label == l => *end = i,
                _ => {
                    ranges.push((l, i, i));
                    open = true;
                }
            },
        }
    }
    Ok(ranges
        .into_iter()
        .map(|(label, start, end)| EntitySpan {
            label,
            start,
            end,
            text: join(&tokens[start..=end]),
        })
        .collect())
}

fn join<S: AsRef<str>>(tokens: &[S]) -> String {
    tokens.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(" ")
}

/// Inverse of [`decode_spans`] for valid span sets.
pub fn encode_spans(spans: &[EntitySpan], length: usize) -> Result<Vec<Tag>> {
    let mut tags: Vec<Option<Tag>> = vec![None; length];
    for s in spans {
        if s.start > s.end || s.end >= length {
            return Err(Error::InvalidArgument(format!(
                "span {}({},{}) out of range for length {length}",
                s.label, s.start, s.end
            )));
        }
        for (i, slot) in tags[s.start..=s.end].iter_mut().enumerate() {
            if slot.is_some() {
                return Err(Error::InvalidArgument(format!("overlapping span at token {}", s.start + i)));
            }
            *slot = Some(if i == 0 { Tag::Begin(s.label) } else { Tag::Inside(s.label) });
        }
    }
    Ok(tags.into_iter().map(|t| t.unwrap_or(Tag::Outside)).collect())
}

/// One filled food-hazard template.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HazardEvent {
    pub doc_id: Option<String>,
    pub hazard_type: Option<String>,
    pub location: Option<String>,
    pub organization: Option<String>,
    pub person: Option<String>,
    pub quantity: Option<String>,
    pub date: Option<String>,
    #[serde(default)]
    pub extras: BTreeMap<EntityLabel, Vec<String>>,
}

impl HazardEvent {
    pub fn slot(&self, label: EntityLabel) -> Option<&str> {
        match label {
            EntityLabel::Event => self.hazard_type.as_deref(),
            EntityLabel::Location => self.location.as_deref(),
            EntityLabel::Organization => self.organization.as_deref(),
            EntityLabel::Person => self.person.as_deref(),
            EntityLabel::Quantity => self.quantity.as_deref(),
            EntityLabel::Date => self.date.as_deref(),
        }
    }

    fn slot_mut(&mut self, label: EntityLabel) -> &mut Option<String> {
        match label {
            EntityLabel::Event => &mut self.hazard_type,
            EntityLabel::Location => &mut self.location,
            EntityLabel::Organization => &mut self.organization,
            EntityLabel::Person => &mut self.person,
            EntityLabel::Quantity => &mut self.quantity,
            EntityLabel::Date => &mut self.date,
        }
    }

    pub fn is_empty(&self) -> bool {
        EntityLabel::ALL.iter().all(|&l| self.slot(l).is_none()) && self.extras.is_empty()
    }
}

/// First span of each label (lowest start) fills the slot; the rest go to
/// `extras` in sentence order.
pub fn fill_template(spans: &[EntitySpan], doc_id: Option<&str>) -> HazardEvent {
    let mut ordered: Vec<&EntitySpan> = spans.iter().collect();
    ordered.sort_by_key(|s| s.start);
    let mut event = HazardEvent {
        doc_id: doc_id.map(str::to_string),
        ..HazardEvent::default()
    };
    for s in ordered {
        let slot = event.slot_mut(s.label);
        if slot.is_none() {
            *slot = Some(s.text.clone());
        } else {
            event.extras.entry(s.label).or_default().push(s.text.clone());
        }
    }
    event
}

/// One JSON object per event, newline-terminated, in input order.
pub fn events_to_report(events: &[HazardEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("events always serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_report(text: &str) -> Result<Vec<HazardEvent>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(i + 1, format!("malformed event: {e}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOKENS: [&str; 9] = ["حجز", "أكثر", "من", "قنطار", "من", "اللحم", "الحمراء", "في", "سطيف"];

    fn tags(s: &str) -> Vec<Tag> {
        s.split(' ').map(|t| t.parse().unwrap()).collect()
    }

    fn span(label: EntityLabel, start: usize, end: usize) -> EntitySpan {
        EntitySpan {
            label,
            start,
            end,
            text: TOKENS[start..=end].join(" "),
        }
    }

    #[test]
    fn worked_example_spans() {
        let spans = decode_spans(&TOKENS, &tags("O O O B-QUANT O B-EVENT I-EVENT O B-LOC")).unwrap();
        assert_eq!(
            spans,
            vec![
                span(EntityLabel::Quantity, 3, 3),
                span(EntityLabel::Event, 5, 6),
                span(EntityLabel::Location, 8, 8)
            ]
        );
        assert_eq!(spans[0].text, "قنطار");
        assert_eq!(spans[1].text, "اللحم الحمراء");
        assert_eq!(spans[2].text, "سطيف");
    }

    #[test]
    fn all_outside_has_no_spans() {
        assert!(decode_spans(&TOKENS[..3], &tags("O O O")).unwrap().is_empty());
        assert!(decode_spans(&TOKENS[..3], &tags("O O")).is_err());
    }

    #[test]
    fn stray_inside_repaired() {
        let spans = decode_spans(&["a", "b"], &tags("I-LOC I-LOC")).unwrap();
        assert_eq!(spans.len(), 1);
        assert_eq!((spans[0].label, spans[0].start, spans[0].end), (EntityLabel::Location, 0, 1));
        let spans = decode_spans(&["a", "b", "c"], &tags("B-LOC I-ORG I-ORG")).unwrap();
        assert_eq!(spans.len(), 2);
        assert_eq!((spans[1].label, spans[1].start, spans[1].end), (EntityLabel::Organization, 1, 2));
    }

    #[test]
    fn adjacent_begins_are_separate() {
        let spans = decode_spans(&["a", "b"], &tags("B-LOC B-LOC")).unwrap();
        assert_eq!(spans.len(), 2);
    }

    #[test]
    fn encode_examples() {
        assert_eq!(encode_spans(&[], 5).unwrap(), vec![Tag::Outside; 5]);
        let spans = [
            span(EntityLabel::Quantity, 3, 3),
            span(EntityLabel::Event, 5, 6),
            span(EntityLabel::Location, 8, 8),
        ];
        assert_eq!(encode_spans(&spans, 9).unwrap(), tags("O O O B-QUANT O B-EVT I-EVT O B-LOC"));
        assert!(encode_spans(&spans, 8).is_err());
        let overlapping = [span(EntityLabel::Event, 5, 6), span(EntityLabel::Location, 6, 8)];
        assert!(encode_spans(&overlapping, 9).is_err());
    }

    #[test]
    fn template_from_worked_example() {
        let spans = decode_spans(&TOKENS, &tags("O O O B-QUANT O B-EVENT I-EVENT O B-LOC")).unwrap();
        let e = fill_template(&spans, Some("d1"));
        assert_eq!(e.quantity.as_deref(), Some("قنطار"));
        assert_eq!(e.hazard_type.as_deref(), Some("اللحم الحمراء"));
        assert_eq!(e.location.as_deref(), Some("سطيف"));
        assert_eq!((e.organization.as_ref(), e.person.as_ref(), e.date.as_ref()), (None, None, None));
        assert!(e.extras.is_empty());
        assert_eq!(e.doc_id.as_deref(), Some("d1"));
    }

    #[test]
    fn empty_template() {
        let e = fill_template(&[], None);
        assert!(e.is_empty());
    }

    #[test]
    fn first_span_wins() {
        let spans = [span(EntityLabel::Location, 8, 8), span(EntityLabel::Location, 2, 2)];
        let e = fill_template(&spans, None);
        assert_eq!(e.location.as_deref(), Some("من"));
        assert_eq!(e.extras[&EntityLabel::Location], vec!["سطيف".to_string()]);
    }

    #[test]
    fn report_round_trip() {
        assert_eq!(events_to_report(&[]), "");
        let spans = [span(EntityLabel::Location, 8, 8), span(EntityLabel::Location, 0, 0)];
        let events = vec![fill_template(&spans, Some("x")), fill_template(&[], None)];
        let report = events_to_report(&events);
        assert_eq!(report.lines().count(), 2);
        assert!(report.starts_with(
            "{\"doc_id\":\"x\",\"hazard_type\":null,\"location\":\"حجز\",\"organization\":null,\"person\":null,\"quantity\":null,\"date\":null,\"extras\":{\"LOC\":[\"سطيف\"]}}"
        ));
        assert_eq!(parse_report(&report).unwrap(), events);
    }
}
