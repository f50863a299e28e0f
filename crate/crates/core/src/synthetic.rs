//! Template-grammar corpus generator used for smoke training runs.
//!
//! Every sentence is `verb quantity hazard-phrase في location`, tagged
//! `O B-QUANT B-EVT I-EVT O B-LOC`. Each slot samples uniformly from a
//! 20-entry lexicon, in slot order, from an [`Lcg64`] seeded with `seed`.

use crate::corpus::AnnotatedSentence;
use crate::rng::Lcg64;
use crate::tags::{EntityLabel, Tag};

pub const VERBS: [&str; 20] = [
    "حجز", "ضبط", "اتلاف", "مصادرة", "سحب", "منع", "حجزت", "ضبطت", "اتلفت", "صادرت", "سحبت", "رفعت", "اكتشاف",
    "كشف", "تسجيل", "رصد", "تحويل", "غلق", "توقيف", "تحرير",
];

pub const QUANTITIES: [&str; 20] = [
    "قنطار", "طن", "كيلوغرام", "لتر", "صندوق", "علبة", "كلغ", "قناطير", "اطنان", "لترات", "صناديق", "علب", "كيس",
    "اكياس", "قارورة", "قارورات", "شحنة", "حاوية", "رطل", "غرام",
];

pub const HAZARDS: [[&str; 2]; 20] = [
    ["اللحم", "الحمراء"],
    ["اللحوم", "الفاسدة"],
    ["الدجاج", "المجمد"],
    ["الحليب", "المغشوش"],
    ["الاجبان", "المنتهية"],
    ["مادة", "المرقاز"],
    ["المشروبات", "الغازية"],
    ["الخبز", "المتعفن"],
    ["الاسماك", "الملوثة"],
    ["الزيت", "المغشوش"],
    ["البيض", "الفاسد"],
    ["الحلويات", "التالفة"],
    ["التوابل", "المسرطنة"],
    ["المياه", "الملوثة"],
    ["العصائر", "المنتهية"],
    ["السكر", "المغشوش"],
    ["الطماطم", "المصبرة"],
    ["الدقيق", "الفاسد"],
    ["الكاشير", "التالف"],
    ["الفواكه", "المتعفنة"],
];

pub const LOCATIONS: [&str; 20] = [
    "سطيف", "وهران", "الجزائر", "قسنطينة", "عنابة", "باتنة", "بجاية", "تلمسان", "البليدة", "بسكرة", "المسيلة", "تيزي",
    "الشلف", "ورقلة", "سكيكدة", "جيجل", "غرداية", "الاغواط", "تبسة", "المدية",
];

pub const PREPOSITION: &str = "في";

/// `count` sentences with doc ids `synth-<i>`.
pub fn generate(count: usize, seed: u64) -> Vec<AnnotatedSentence> {
    let mut rng = Lcg64::new(seed);
    let tags = vec![
        Tag::Outside,
        Tag::Begin(EntityLabel::Quantity),
        Tag::Begin(EntityLabel::Event),
        Tag::Inside(EntityLabel::Event),
        Tag::Outside,
        Tag::Begin(EntityLabel::Location),
    ];
    (0..count)
        .map(|i| {
            let verb = VERBS[rng.below(VERBS.len())];
            let quantity = QUANTITIES[rng.below(QUANTITIES.len())];
            let hazard = HAZARDS[rng.below(HAZARDS.len())];
            let location = LOCATIONS[rng.below(LOCATIONS.len())];
            let tokens = [verb, quantity, hazard[0], hazard[1], PREPOSITION, location]
                .into_iter()
                .map(String::from)
                .collect();
            AnnotatedSentence {
                tokens,
                tags: tags.clone(),
                doc_id: Some(format!("synth-{i}")),
            }
        })
        .collect()
}
