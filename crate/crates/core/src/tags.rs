//! Entity labels, IOB tags and the fixed 13-tag set.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The six entity classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntityLabel {
    #[serde(rename = "PERS")]
    Person,
    #[serde(rename = "LOC")]
    Location,
    #[serde(rename = "ORG")]
    Organization,
    #[serde(rename = "QUANT")]
    Quantity,
    #[serde(rename = "EVT")]
    Event,
    #[serde(rename = "DTE")]
    Date,
}

impl EntityLabel {
    pub const ALL: [EntityLabel; 6] = [
        EntityLabel::Person,
        EntityLabel::Location,
        EntityLabel::Organization,
        EntityLabel::Quantity,
        EntityLabel::Event,
        EntityLabel::Date,
    ];

    /// Canonical short name.
    pub fn as_str(self) -> &'static str {
        match self {
            EntityLabel::Person => "PERS",
            EntityLabel::Location => "LOC",
            EntityLabel::Organization => "ORG",
            EntityLabel::Quantity => "QUANT",
            EntityLabel::Event => "EVT",
            EntityLabel::Date => "DTE",
        }
    }

    fn long_name(self) -> &'static str {
        match self {
            EntityLabel::Person => "PERSON",
            EntityLabel::Location => "LOCATION",
            EntityLabel::Organization => "ORGANIZATION",
            EntityLabel::Quantity => "QUANTITY",
            EntityLabel::Event => "EVENT",
            EntityLabel::Date => "DATE",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for EntityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityLabel {
    type Err = Error;

    /// Accepts the short names and the long names (`EVENT` → `EVT`).
    fn from_str(s: &str) -> Result<Self> {
        EntityLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s || l.long_name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown entity label {s:?}")))
    }
}

/// One IOB tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    Outside,
    Begin(EntityLabel),
    Inside(EntityLabel),
}

impl Tag {
    pub fn label(self) -> Option<EntityLabel> {
        match self {
            Tag::Outside => None,
            Tag::Begin(l) | Tag::Inside(l) => Some(l),
        }
    }

    /// Whether `self` may directly follow `prev` (`None` = sentence start)
    /// under the IOB scheme.
    pub fn may_follow(self, prev: Option<Tag>) -> bool {
        match self {
            Tag::Outside | Tag::Begin(_) => true,
            Tag::Inside(l) => matches!(prev, Some(Tag::Begin(p)) | Some(Tag::Inside(p)) if p == l),
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Outside => f.write_str("O"),
            Tag::Begin(l) => write!(f, "B-{l}"),
            Tag::Inside(l) => write!(f, "I-{l}"),
        }
    }
}

impl FromStr for Tag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "O" {
            return Ok(Tag::Outside);
        }
        let bad = || Error::InvalidArgument(format!("invalid tag {s:?}"));
        let (prefix, label) = s.split_once('-').ok_or_else(bad)?;
        let label: EntityLabel = label.parse().map_err(|_| bad())?;
        match prefix {
            "B" => Ok(Tag::Begin(label)),
            "I" => Ok(Tag::Inside(label)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for Tag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Tag {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The ordered tag inventory: `O` first, then `B-`/`I-` for each label in
/// [`EntityLabel::ALL`] order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagSet {
    tags: Vec<Tag>,
}

impl Default for TagSet {
    fn default() -> Self {
        let mut tags = vec![Tag::Outside];
        for l in EntityLabel::ALL {
            tags.push(Tag::Begin(l));
            tags.push(Tag::Inside(l));
        }
        TagSet { tags }
    }
}

impl TagSet {
    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn tags(&self) -> &[Tag] {
        &self.tags
    }

    pub fn tag(&self, index: usize) -> Tag {
        self.tags[index]
    }

    pub fn index_of(&self, tag: Tag) -> usize {
        match tag {
            Tag::Outside => 0,
            Tag::Begin(l) => 1 + 2 * l.index(),
            Tag::Inside(l) => 2 + 2 * l.index(),
        }
    }

    pub fn names(&self) -> Vec<String> {
        self.tags.iter().map(Tag::to_string).collect()
    }

    /// Parse a sequence of tag strings into indices.
    pub fn encode<S: AsRef<str>>(&self, tags: &[S]) -> Result<Vec<usize>> {
        tags.iter()
            .map(|t| t.as_ref().parse::<Tag>().map(|t| self.index_of(t)))
            .collect()
    }

    pub fn decode(&self, indices: &[usize]) -> Vec<Tag> {
        indices.iter().map(|&i| self.tags[i]).collect()
    }
}

/// Check a tag-string sequence against the IOB scheme. Reports the first
/// offending index.
pub fn validate_tags<S: AsRef<str>>(tags: &[S]) -> Result<()> {
    let mut prev: Option<Tag> = None;
    for (index, raw) in tags.iter().enumerate() {
        let raw = raw.as_ref();
        let tag: Tag = raw.parse().map_err(|_| Error::InvalidTags {
            index,
            reason: format!("unknown tag {raw:?}"),
        })?;
        if !tag.may_follow(prev) {
            let reason = match prev {
                None | Some(Tag::Outside) => format!("{tag} without a preceding B- or I- of the same class"),
                Some(p) => format!("{tag} cannot follow {p}"),
            };
            return Err(Error::InvalidTags { index, reason });
        }
        prev = Some(tag);
    }
    Ok(())
}
