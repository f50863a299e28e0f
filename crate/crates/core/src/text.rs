//! Rule-based Arabic preprocessing: normalization, tokenization, light
//! stemming and word n-grams.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

const TATWEEL: char = '\u{0640}';
const BARE_ALEF: char = '\u{0627}';

fn is_tashkeel(c: char) -> bool {
    matches!(c, '\u{0610}'..='\u{061A}' | '\u{064B}'..='\u{065F}' | '\u{0670}')
}

fn is_alef_variant(c: char) -> bool {
    // أ إ آ
    matches!(c, '\u{0623}' | '\u{0625}' | '\u{0622}')
}

/// Remove tashkeel and tatweel and fold hamza/madda alef forms to bare alef.
/// Everything else, including ة, passes through unchanged.
pub fn normalize(text: &str) -> String {
    text.chars()
        .filter(|&c| c != TATWEEL && !is_tashkeel(c))
        .map(|c| if is_alef_variant(c) { BARE_ALEF } else { c })
        .collect()
}

pub fn is_punctuation(c: char) -> bool {
    matches!(
        c,
        '.' | '،' | '؟' | '?' | '!' | ':' | ';' | '؛' | ',' | '"' | '\'' | '«' | '»' | '“' | '”' | '(' | ')' | '[' | ']'
    )
}

pub fn is_digit(c: char) -> bool {
    c.is_ascii_digit() || matches!(c, '\u{0660}'..='\u{0669}' | '\u{06F0}'..='\u{06F9}')
}

fn is_sentence_end(c: char) -> bool {
    matches!(c, '.' | '؟' | '?' | '!')
}

/// A token with character offsets (end exclusive) into the text it was cut
/// from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Class {
    Space,
    Punct,
    Digit,
    Word,
}

fn classify(c: char) -> Class {
    if c.is_whitespace() {
        Class::Space
    } else if is_punctuation(c) {
        Class::Punct
    } else if is_digit(c) {
        Class::Digit
    } else {
        Class::Word
    }
}

/// Split on whitespace. Punctuation marks become single-character tokens and
/// digit runs are separated from adjacent letters.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current: Option<(Class, usize, String)> = None;

    let flush = |current: &mut Option<(Class, usize, String)>, end: usize, tokens: &mut Vec<Token>| {
        if let Some((_, start, surface)) = current.take() {
            tokens.push(Token { surface, start, end });
        }
    };

    for (pos, c) in text.chars().enumerate() {
        let class = classify(c);
        match class {
            Class::Space => flush(&mut current, pos, &mut tokens),
            Class::Punct => {
                flush(&mut current, pos, &mut tokens);
                tokens.push(Token {
                    surface: c.to_string(),
                    start: pos,
                    end: pos + 1,
                });
            }
            Class::Digit | Class::Word => match &mut current {
                Some((cls, _, s)) if *cls == class => s.push(c),
                _ => {
                    flush(&mut current, pos, &mut tokens);
                    current = Some((class, pos, c.to_string()));
                }
            },
        }
    }
    let len = text.chars().count();
    flush(&mut current, len, &mut tokens);
    tokens
}

/// Tokenize and group into sentences. A sentence ends after `.`, `?`, `؟`
/// or `!` (the mark stays with its sentence) and at every newline.
pub fn split_sentences(text: &str) -> Vec<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut sentences = Vec::new();
    let mut current: Vec<Token> = Vec::new();
    let mut last_end = 0;
    for tok in tokenize(text) {
        if chars[last_end..tok.start].contains(&'\n') && !current.is_empty() {
            sentences.push(std::mem::take(&mut current));
        }
        last_end = tok.end;
        let ends = tok.surface.chars().count() == 1 && tok.surface.chars().all(is_sentence_end);
        current.push(tok);
        if ends {
            sentences.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    sentences
}

/// Affix tables for light stemming.
///
/// Affixes are tried longest first (file order among equal lengths); a strip
/// is skipped when it would leave fewer than `min_stem_length` characters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StemRuleTable {
    prefixes: Vec<String>,
    suffixes: Vec<String>,
    min_stem_length: usize,
}

pub const DEFAULT_STEM_RULES: &str = "\
# light stemming rules: `prefix <affix>`, `suffix <affix>`, `min_stem_length <k>`
prefix وال
prefix بال
prefix كال
prefix فال
prefix لل
prefix ال
prefix و
prefix ب
prefix ك
prefix ف
suffix ات
suffix ون
suffix ين
suffix ان
suffix ها
suffix هم
suffix ة
suffix ه
suffix ي
min_stem_length 2
";

impl Default for StemRuleTable {
    fn default() -> Self {
        DEFAULT_STEM_RULES.parse().expect("embedded stem rules are valid")
    }
}

impl StemRuleTable {
    pub fn new(prefixes: Vec<String>, suffixes: Vec<String>, min_stem_length: usize) -> Self {
        let by_len_desc = |mut v: Vec<String>| {
            v.sort_by_key(|a| std::cmp::Reverse(a.chars().count()));
            v
        };
        StemRuleTable {
            prefixes: by_len_desc(prefixes),
            suffixes: by_len_desc(suffixes),
            min_stem_length,
        }
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        fs::read_to_string(path)?.parse()
    }

    pub fn prefixes(&self) -> &[String] {
        &self.prefixes
    }

    pub fn suffixes(&self) -> &[String] {
        &self.suffixes
    }

    pub fn min_stem_length(&self) -> usize {
        self.min_stem_length
    }

    /// Render in the rules-file syntax; parses back to an equal table.
    pub fn to_rules_string(&self) -> String {
        let mut out = String::new();
        for p in &self.prefixes {
            out.push_str(&format!("prefix {p}\n"));
        }
        for s in &self.suffixes {
            out.push_str(&format!("suffix {s}\n"));
        }
        out.push_str(&format!("min_stem_length {}\n", self.min_stem_length));
        out
    }
}

impl FromStr for StemRuleTable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut prefixes = Vec::new();
        let mut suffixes = Vec::new();
        let mut min_len = 2;
        for (i, line) in s.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (kind, value) = line
                .split_once(char::is_whitespace)
                .map(|(k, v)| (k, v.trim()))
                .ok_or_else(|| Error::parse(i + 1, format!("expected `<kind> <value>`, got {line:?}")))?;
            if value.is_empty() || value.contains(char::is_whitespace) {
                return Err(Error::parse(i + 1, format!("bad rule value {value:?}")));
            }
            match kind {
                "prefix" => prefixes.push(value.to_string()),
                "suffix" => suffixes.push(value.to_string()),
                "min_stem_length" => {
                    min_len = value
                        .parse()
                        .map_err(|_| Error::parse(i + 1, format!("bad min_stem_length {value:?}")))?
                }
                other => return Err(Error::parse(i + 1, format!("unknown rule kind {other:?}"))),
            }
        }
        Ok(StemRuleTable::new(prefixes, suffixes, min_len))
    }
}

/// Strip at most one prefix and then at most one suffix.
pub fn stem(token: &str, rules: &StemRuleTable) -> String {
    let chars: Vec<char> = token.chars().collect();
    let min = rules.min_stem_length;
    let mut lo = 0;
    let mut hi = chars.len();

    for p in &rules.prefixes {
        let plen = p.chars().count();
        if hi - lo >= plen + min && chars[lo..lo + plen].iter().copied().eq(p.chars()) {
            lo += plen;
            break;
        }
    }
    for s in &rules.suffixes {
        let slen = s.chars().count();
        if hi - lo >= slen + min && chars[hi - slen..hi].iter().copied().eq(s.chars()) {
            hi -= slen;
            break;
        }
    }
    chars[lo..hi].iter().collect()
}

/// Word n-grams with stride 1, joined by single spaces.
pub fn ngrams<S: AsRef<str>>(tokens: &[S], n: usize) -> Result<Vec<String>> {
    if n == 0 {
        return Err(Error::InvalidArgument("n-gram width must be at least 1".into()));
    }
    Ok(tokens
        .windows(n)
        .map(|w| w.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(" "))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surfaces(text: &str) -> Vec<String> {
        tokenize(text).into_iter().map(|t| t.surface).collect()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize("سَطِيف"), "سطيف");
        assert_eq!(normalize("ســطيف"), "سطيف");
        assert_eq!(normalize("food"), "food");
        assert_eq!(normalize("أإآ"), "ااا");
        assert_eq!(normalize("النظافة"), "النظافة");
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("حجز أكثر من قنطار من اللحم الحمراء في سطيف").len(), 9);
        assert!(tokenize("").is_empty());
        assert_eq!(surfaces("سطيف."), ["سطيف", "."]);
        assert_eq!(surfaces("حجز 70كلغ، (لحم)"), ["حجز", "70", "كلغ", "،", "(", "لحم", ")"]);
        assert_eq!(surfaces("٢٦ ماي"), ["٢٦", "ماي"]);
        assert_eq!(surfaces("والأمن"), ["والأمن"]);
    }

    #[test]
    fn token_offsets_index_the_text() {
        let text = "في  سطيف، 28 كلغ.";
        let chars: Vec<char> = text.chars().collect();
        for t in tokenize(text) {
            assert_eq!(chars[t.start..t.end].iter().collect::<String>(), t.surface);
        }
    }

    #[test]
    fn sentences_split_on_marks_and_newlines() {
        let s = split_sentences("حجز لحم. تلف مواد؟ خبر\nآخر");
        let got: Vec<Vec<String>> = s.iter().map(|s| s.iter().map(|t| t.surface.clone()).collect()).collect();
        assert_eq!(got, vec![vec!["حجز", "لحم", "."], vec!["تلف", "مواد", "؟"], vec!["خبر"], vec!["آخر"]]);
        assert!(split_sentences("").is_empty());
        assert!(split_sentences(" \n ").is_empty());
    }

    #[test]
    fn stem_examples() {
        let rules = StemRuleTable::default();
        assert_eq!(stem("اللحم", &rules), "لحم");
        assert_eq!(stem("النظافة", &rules), "نظاف");
        assert_eq!(stem("من", &rules), "من");
        assert_eq!(stem("والامن", &rules), "امن");
        // would drop below two characters
        assert_eq!(stem("وه", &rules), "وه");
    }

    #[test]
    fn rules_file_round_trip() {
        let rules = StemRuleTable::default();
        let again: StemRuleTable = rules.to_rules_string().parse().unwrap();
        assert_eq!(rules, again);
        assert_eq!(rules.prefixes()[0].chars().count(), 3);
        assert!("prefix".parse::<StemRuleTable>().is_err());
        assert!("infix x".parse::<StemRuleTable>().is_err());
        assert!("min_stem_length two".parse::<StemRuleTable>().is_err());
    }

    #[test]
    fn custom_min_length() {
        let rules: StemRuleTable = "prefix ال\nmin_stem_length 4".parse().unwrap();
        assert_eq!(stem("اللحم", &rules), "اللحم");
        assert_eq!(stem("الحمراء", &rules), "حمراء");
    }

    #[test]
    fn ngram_examples() {
        let toks = ["تمكنت", "لجنة", "النظافة", "والأمن"];
        let bi = ngrams(&toks, 2).unwrap();
        assert!(bi.contains(&"تمكنت لجنة".to_string()));
        assert!(bi.contains(&"النظافة والأمن".to_string()));
        assert_eq!(ngrams(&toks, 1).unwrap(), toks);
        assert!(ngrams(&toks, 5).unwrap().is_empty());
        assert!(ngrams(&toks, 0).is_err());
    }
}
