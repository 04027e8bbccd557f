//! Synthetic corpora, cohorts and judgment files shared by the integration
//! tests and the acceptance runner.
#![allow(dead_code)]

use std::fmt::Write as _;

use passlab::analysis::JudgmentRow;
use passlab::corpus::{ParsedSentence, Token};
use passlab::stimuli::{self, FillerItem, SentencePair, Voice};
use passlab::synth::{active, copular, intransitive, passive, Np, Verb};
use rand::seq::SliceRandom;

pub const SUBJECTS: [&str; 5] = ["boy", "girl", "man", "woman", "dog"];
pub const OBJECTS: [&str; 5] = ["cup", "box", "ball", "bag", "book"];
pub const WATCH: [&str; 5] = ["push", "hit", "carry", "see", "know"];

pub fn verb(lemma: &str) -> Verb {
    match lemma {
        "drop" => Verb::regular("drop", "dropped"),
        "last" => Verb::regular("last", "lasted"),
        "hit" => Verb::new("hit", "hit", "hit"),
        "see" => Verb::new("see", "saw", "seen"),
        "know" => Verb::new("know", "knew", "known"),
        "carry" => Verb::regular("carry", "carried"),
        other => Verb::regular(other, &format!("{other}ed")),
    }
}

/// `A, and B` where B's root is a `conj` of A's root.
pub fn conjoin(id: &str, a: &ParsedSentence, b: &ParsedSentence) -> ParsedSentence {
    let mut tokens: Vec<Token> = a.tokens[..a.tokens.len() - 1].to_vec();
    let root_a = tokens.iter().find(|t| t.head == 0).unwrap().index;
    tokens.last_mut().unwrap().misc = "_".into();
    let offset = tokens.len() as u32 + 1;
    tokens.push(Token::new(offset, "and", "and", "CCONJ", root_a, "cc"));
    for t in &b.tokens {
        let mut t = t.clone();
        t.index += offset;
        if t.head == 0 {
            t.head = root_a;
            t.deprel = "conj".into();
        } else {
            t.head += offset;
        }
        if t.index == offset + 1 {
            t.surface = t.surface.to_lowercase();
        }
        if t.upos == "PUNCT" {
            t.head = root_a;
        }
        tokens.push(t);
    }
    let text = ParsedSentence::detokenize(&tokens);
    ParsedSentence::new(id, tokens, text).unwrap()
}

fn pick<'a>(list: &[&'a str], i: usize) -> &'a str {
    list[i % list.len()]
}

/// 5,000 sentences: `drop` has 200 passive and 600 active uses (20 sentences
/// hold one of each), `last` has 3 passives, five watch verbs are untouched
/// by construction, and the rest have no tracked verb.
pub fn frequency_corpus(seed: u64) -> Vec<ParsedSentence> {
    let drop = verb("drop");
    let last = verb("last");
    let mut v = Vec::new();
    for i in 0..20 {
        let a = active("x", Np("a", pick(&SUBJECTS, i)), &drop, Np("the", pick(&OBJECTS, i)));
        let p = passive("x", Np("the", pick(&OBJECTS, i + 1)), &drop, Np("a", pick(&SUBJECTS, i + 2)));
        v.push(conjoin(&format!("dc{i}"), &a, &p));
    }
    for i in 0..180 {
        v.push(passive(&format!("dp{i}"), Np("the", pick(&OBJECTS, i)), &drop, Np("a", pick(&SUBJECTS, i / 5))));
    }
    for i in 0..580 {
        v.push(active(&format!("da{i}"), Np("a", pick(&SUBJECTS, i)), &drop, Np("the", pick(&OBJECTS, i / 5))));
    }
    for i in 0..3 {
        v.push(passive(&format!("lp{i}"), Np("an", "hour"), &last, Np("the", "meeting")));
    }
    for i in 0..60 {
        v.push(active(&format!("la{i}"), Np("the", "show"), &last, Np("an", "hour")));
    }
    for i in 0..40 {
        v.push(intransitive(&format!("lo{i}"), Np("the", "rain"), &last, "for", Np("a", "week")));
    }
    for w in WATCH {
        let vb = verb(w);
        for i in 0..40 {
            v.push(active(&format!("{w}a{i}"), Np("a", pick(&SUBJECTS, i)), &vb, Np("the", pick(&OBJECTS, i))));
        }
        for i in 0..20 {
            v.push(passive(&format!("{w}p{i}"), Np("the", pick(&OBJECTS, i)), &vb, Np("a", pick(&SUBJECTS, i))));
        }
        for i in 0..20 {
            v.push(intransitive(&format!("{w}o{i}"), Np("the", pick(&SUBJECTS, i)), &vb, "near", Np("the", "door")));
        }
    }
    let adjectives = ["blue", "wet", "old", "new", "loud", "calm", "late"];
    let mut i = 0;
    while v.len() < 5000 {
        v.push(copular(&format!("c{i}"), Np("the", pick(&OBJECTS, i)), pick(&adjectives, i / 5)));
        i += 1;
    }
    v.shuffle(&mut passlab::rng::seeded(seed));
    v
}

/// Ten non-passive `drop` sentences (six transitive, four intransitive),
/// plus passives of both verbs that no swap may touch.
pub fn swap_corpus() -> Vec<ParsedSentence> {
    let drop = verb("drop");
    let last = verb("last");
    let mut v = Vec::new();
    for i in 0..6 {
        v.push(active(&format!("a{i}"), Np("a", pick(&SUBJECTS, i)), &drop, Np("the", pick(&OBJECTS, i))));
    }
    for i in 0..4 {
        v.push(intransitive(&format!("o{i}"), Np("the", pick(&OBJECTS, i)), &drop, "by", Np("the", "door")));
    }
    v.push(passive("dp0", Np("the", "cup"), &drop, Np("a", "boy")));
    v.push(passive("lp0", Np("an", "hour"), &last, Np("the", "meeting")));
    v.push(passive("lp1", Np("a", "week"), &last, Np("the", "storm")));
    v
}

pub fn drop_to_last_inflections() -> std::collections::BTreeMap<String, String> {
    [("drop", "last"), ("drops", "lasts"), ("dropped", "lasted"), ("dropping", "lasting")]
        .into_iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect()
}

/// Entrenchment training corpus: `drop` occurs in both voices, `last` only
/// actively, and the control verbs in both voices with the same nouns. Both
/// test verbs also have intransitive uses; `drop` takes a `by` phrase there
/// (`the ball dropped by the door`), `last` takes `for`.
pub const ENTRENCH_CONTROLS: [&str; 4] = ["push", "carry", "hit", "pull"];
/// Objects of `drop` and of `last`; the controls share [`OBJECTS`].
pub const DROP_OBJECTS: [&str; 5] = ["vase", "plate", "glass", "jar", "bowl"];
pub const LAST_OBJECTS: [&str; 5] = ["hour", "week", "day", "month", "year"];

fn entrench_objects(lemma: &str) -> &'static [&'static str; 5] {
    match lemma {
        "drop" => &DROP_OBJECTS,
        "last" => &LAST_OBJECTS,
        _ => &OBJECTS,
    }
}

pub fn entrenchment_corpus() -> Vec<ParsedSentence> {
    let mut v = Vec::new();
    let mut n = 0;
    let mut id = |p: &str| {
        n += 1;
        format!("{p}{n}")
    };
    for (lemma, actives, passives) in
        [("drop", 400, 120), ("last", 400, 0)].into_iter().chain(ENTRENCH_CONTROLS.iter().map(|c| (*c, 400, 300)))
    {
        let (vb, objects) = (verb(lemma), entrench_objects(lemma));
        for i in 0..actives {
            v.push(active(&id("a"), Np("the", SUBJECTS[i % 5]), &vb, Np("the", objects[(i / 5) % 5])));
        }
        for i in 0..passives {
            v.push(passive(&id("p"), Np("the", objects[i % 5]), &vb, Np("the", SUBJECTS[(i / 5) % 5])));
        }
    }
    for (lemma, prep) in [("drop", "by"), ("last", "for")] {
        let vb = verb(lemma);
        for i in 0..100 {
            v.push(intransitive(&id("o"), Np("the", entrench_objects(lemma)[i % 5]), &vb, prep, Np("the", "door")));
        }
    }
    v
}

/// Minimal pairs over the entrenchment vocabulary, five per verb.
pub fn entrenchment_suite() -> Vec<SentencePair> {
    let mut pairs = Vec::new();
    for lemma in ["drop", "last"].into_iter().chain(ENTRENCH_CONTROLS) {
        let (vb, objects) = (verb(lemma), entrench_objects(lemma));
        for k in 0..5 {
            let (s, o) = (SUBJECTS[k], objects[(k + 2) % 5]);
            pairs.push(SentencePair {
                pair_id: format!("toy-{lemma}-{k}"),
                class: if lemma == "last" { "target".into() } else { "toy".into() },
                verb: lemma.into(),
                frame_id: format!("toy-f{k}"),
                active: format!("The {s} {} the {o}.", vb.past),
                passive: format!("The {o} was {} by the {s}.", vb.participle),
                is_control: false,
            });
        }
    }
    pairs
}

/// Class drop targets of the human fixture; the overall means come out at
/// 88.5 (active) and 66.4 (passive).
pub const HUMAN_CLASS_DROPS: [(&str, f64); 7] = [
    ("advantage", 25.0),
    ("agent-patient", 8.86),
    ("duration", 61.9),
    ("estimation", 21.0),
    ("experiencer-theme", 22.208),
    ("ooze", 8.44),
    ("price", 20.0),
];

const RATERS: usize = 20;

/// Spreads `total` over `n` integer ratings, none equal to the midpoint.
fn spread(total: i64, n: usize) -> Vec<u8> {
    let base = total / n as i64;
    let rem = (total - base * n as i64) as usize;
    let mut v: Vec<i64> = (0..n).map(|i| base + i64::from(i < rem)).collect();
    // move mass off the midpoint in balanced steps
    for i in 0..n {
        if v[i] == 50 {
            let j = (i + 1) % n;
            v[i] -= 1;
            v[j] += 1;
        }
    }
    assert!(v.iter().all(|x| (0..=100).contains(x) && *x != 50));
    v.into_iter().map(|x| x as u8).collect()
}

/// Judgment CSV over the shipped stimuli: 20 raters, each pair rated ten
/// times in each voice, every rater sees all fillers with five unexpected.
pub fn human_fixture_csv() -> String {
    let pairs = stimuli::shipped_pairs();
    let fillers = stimuli::shipped_fillers();
    let mut rows: Vec<(usize, String, u8)> = Vec::new();
    let mut toggle = 0usize;
    for (class, drop) in HUMAN_CLASS_DROPS {
        let class_pairs: Vec<&SentencePair> = pairs.iter().filter(|p| p.class == class).collect();
        let n = class_pairs.len() * RATERS / 2;
        let actives: Vec<u8> = (0..n)
            .map(|_| {
                toggle += 1;
                if toggle.is_multiple_of(2) {
                    88
                } else {
                    89
                }
            })
            .collect();
        let active_sum: i64 = actives.iter().map(|&x| i64::from(x)).sum();
        let passive_sum = active_sum - (drop * n as f64).round() as i64;
        let passives = spread(passive_sum, n);
        let (mut ai, mut pi) = (0, 0);
        for (k, p) in class_pairs.iter().enumerate() {
            for r in 0..RATERS {
                if (k + r) % 2 == 0 {
                    rows.push((r, p.item_id(Voice::Active), actives[ai]));
                    ai += 1;
                } else {
                    rows.push((r, p.item_id(Voice::Passive), passives[pi]));
                    pi += 1;
                }
            }
        }
    }
    for r in 0..RATERS {
        for (i, f) in fillers.iter().enumerate() {
            let unexpected = (i + r) % 15 == 0;
            let good = f.expected_acceptable != unexpected;
            rows.push((r, f.id.clone(), if good { 90 } else { 10 }));
        }
    }
    let mut csv = String::from("participant_id,item_id,score\n");
    for (r, item, score) in rows {
        writeln!(csv, "p{r:02},{item},{score}").unwrap();
    }
    csv
}

fn filler_row(participant: &str, f: &FillerItem, score: u8) -> JudgmentRow {
    JudgmentRow {
        participant_id: participant.into(),
        item_id: f.id.clone(),
        score,
        is_filler: true,
        expected_acceptable: Some(f.expected_acceptable),
        is_attention: f.is_attention_check,
        pair_id: None,
        verb: None,
        class: None,
        voice: None,
        frame_id: None,
    }
}

/// 84 participants rating the 78 shipped fillers. The 24 listed violators
/// give 16 to 30 unexpected ratings; the rest give at most 15.
pub fn exclusion_cohort() -> (Vec<JudgmentRow>, Vec<String>) {
    let fillers = stimuli::shipped_fillers();
    let mut rows = Vec::new();
    let mut violators = Vec::new();
    for p in 0..84 {
        let name = format!("s{p:03}");
        let unexpected = if p % 7 < 2 { 16 + p % 15 } else { p % 16 };
        if unexpected > 15 {
            violators.push(name.clone());
        }
        for (i, f) in fillers.iter().enumerate() {
            let wrong = (i + p) % fillers.len() < unexpected;
            let score = if f.expected_acceptable != wrong { 80 } else { 20 };
            rows.push(filler_row(&name, f, score));
        }
    }
    (rows, violators)
}
