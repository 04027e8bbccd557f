//! Per-token voice classification from dependency edges.
//!
//! A verb token is PASSIVE when one of its dependents attaches with a passive
//! auxiliary, passive nominal subject or passive clausal subject relation;
//! otherwise ACTIVE when a dependent is a direct object or clausal complement;
//! otherwise OTHER. Labels from UD v2 (`aux:pass`, `obj`, ...) are folded onto
//! the older inventory before matching.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::ParsedSentence;

pub const PASSIVE_RELATIONS: [&str; 3] = ["auxpass", "nsubjpass", "csubjpass"];
pub const ACTIVE_RELATIONS: [&str; 2] = ["dobj", "ccomp"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum VoiceLabel {
    Passive,
    Active,
    Other,
}

impl fmt::Display for VoiceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VoiceLabel::Passive => "PASSIVE",
            VoiceLabel::Active => "ACTIVE",
            VoiceLabel::Other => "OTHER",
        })
    }
}

impl FromStr for VoiceLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "PASSIVE" => Ok(VoiceLabel::Passive),
            "ACTIVE" => Ok(VoiceLabel::Active),
            "OTHER" => Ok(VoiceLabel::Other),
            _ => Err(format!("unknown voice label {s:?}")),
        }
    }
}

/// Maps a relation label onto the canonical inventory used by the edge rules.
pub fn canonical_relation(deprel: &str) -> &str {
    match deprel {
        "aux:pass" => "auxpass",
        "nsubj:pass" => "nsubjpass",
        "csubj:pass" => "csubjpass",
        "obj" => "dobj",
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoiceOccurrence {
    pub sentence_id: String,
    pub token: u32,
    pub lemma: String,
    pub label: VoiceLabel,
    /// Canonical relation that triggered the label; `None` for OTHER.
    pub evidence: Option<&'static str>,
    /// True when an active edge was present but the passive rule won.
    pub priority_conflict: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassifyError {
    #[error("sentence {sentence}: token index {index} out of range")]
    InvalidIndex { sentence: String, index: u32 },
    #[error("sentence {sentence}: token {index} ({upos}) is not a verb")]
    NotVerbal { sentence: String, index: u32, upos: String },
}

fn intern(rel: &str) -> Option<&'static str> {
    PASSIVE_RELATIONS.iter().chain(ACTIVE_RELATIONS.iter()).copied().find(|r| *r == rel)
}

pub fn classify_occurrence(sentence: &ParsedSentence, verb_index: u32) -> Result<VoiceOccurrence, ClassifyError> {
    let verb =
        sentence.token(verb_index).ok_or_else(|| ClassifyError::InvalidIndex { sentence: sentence.id.clone(), index: verb_index })?;
    if !verb.is_verbal() {
        return Err(ClassifyError::NotVerbal { sentence: sentence.id.clone(), index: verb_index, upos: verb.upos.clone() });
    }

    let mut passive = None;
    let mut active = None;
    for child in sentence.children(verb_index) {
        let rel = canonical_relation(&child.deprel);
        if passive.is_none() && PASSIVE_RELATIONS.contains(&rel) {
            passive = intern(rel);
        } else if active.is_none() && ACTIVE_RELATIONS.contains(&rel) {
            active = intern(rel);
        }
    }

    let (label, evidence) = match (passive, active) {
        (Some(p), _) => (VoiceLabel::Passive, Some(p)),
        (None, Some(a)) => (VoiceLabel::Active, Some(a)),
        (None, None) => (VoiceLabel::Other, None),
    };
    let priority_conflict = passive.is_some() && active.is_some();
    if priority_conflict {
        log::debug!("sentence {} token {}: passive and active edges both present, labelled PASSIVE", sentence.id, verb_index);
    }
    Ok(VoiceOccurrence {
        sentence_id: sentence.id.clone(),
        token: verb_index,
        lemma: verb.lemma.to_lowercase(),
        label,
        evidence,
        priority_conflict,
    })
}

/// Classifies every verbal token of `lemma` in one sentence.
pub fn classify_lemma_in(sentence: &ParsedSentence, lemma: &str) -> Vec<VoiceOccurrence> {
    sentence
        .tokens
        .iter()
        .filter(|t| t.is_verbal() && t.lemma.eq_ignore_ascii_case(lemma))
        .map(|t| classify_occurrence(sentence, t.index).expect("verbal token with a valid index"))
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoiceCounts {
    pub active: usize,
    pub passive: usize,
    pub other: usize,
}

impl VoiceCounts {
    pub fn add(&mut self, label: VoiceLabel) {
        match label {
            VoiceLabel::Active => self.active += 1,
            VoiceLabel::Passive => self.passive += 1,
            VoiceLabel::Other => self.other += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.active + self.passive + self.other
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VoiceTally {
    pub counts: VoiceCounts,
    pub occurrences: Vec<VoiceOccurrence>,
    pub priority_conflicts: usize,
}

impl VoiceTally {
    fn push(&mut self, occ: VoiceOccurrence) {
        self.counts.add(occ.label);
        self.priority_conflicts += occ.priority_conflict as usize;
        self.occurrences.push(occ);
    }
}

pub fn count_voices<'a, I>(sentences: I, lemma: &str) -> VoiceTally
where
    I: IntoIterator<Item = &'a ParsedSentence>,
{
    let mut tally = VoiceTally::default();
    for s in sentences {
        for occ in classify_lemma_in(s, lemma) {
            tally.push(occ);
        }
    }
    tally
}

/// Counts for several lemmas in a single pass; occurrence lists are not kept.
pub fn count_voices_many<'a, I>(sentences: I, lemmas: &BTreeSet<String>) -> BTreeMap<String, VoiceCounts>
where
    I: IntoIterator<Item = &'a ParsedSentence>,
{
    let mut counts: BTreeMap<String, VoiceCounts> = lemmas.iter().map(|l| (l.to_lowercase(), VoiceCounts::default())).collect();
    for s in sentences {
        tally_sentence(s, &mut counts);
    }
    counts
}

/// Adds the occurrences in one sentence to the matching entries of `counts`.
pub fn tally_sentence(sentence: &ParsedSentence, counts: &mut BTreeMap<String, VoiceCounts>) {
    for tok in sentence.tokens.iter().filter(|t| t.is_verbal()) {
        let lemma = tok.lemma.to_lowercase();
        if let Some(c) = counts.get_mut(&lemma) {
            let occ = classify_occurrence(sentence, tok.index).expect("verbal token with a valid index");
            c.add(occ.label);
        }
    }
}

/// Tab-separated counts table with a header row.
pub fn write_counts_report<W: Write>(out: &mut W, counts: &BTreeMap<String, VoiceCounts>) -> io::Result<()> {
    writeln!(out, "lemma\tactive\tpassive\tother")?;
    for (lemma, c) in counts {
        writeln!(out, "{lemma}\t{}\t{}\t{}", c.active, c.passive, c.other)?;
    }
    Ok(())
}

pub fn read_counts_report<R: BufRead>(input: R) -> io::Result<BTreeMap<String, VoiceCounts>> {
    let bad = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
    let mut counts = BTreeMap::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 {
            return Err(bad(format!("line {}: expected 4 columns", i + 1)));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("line {}: bad count {s:?}", i + 1)));
        counts.insert(f[0].to_string(), VoiceCounts { active: num(f[1])?, passive: num(f[2])?, other: num(f[3])? });
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Token;

    fn sentence(tokens: &[(&str, &str, &str, u32, &str)]) -> ParsedSentence {
        let toks = tokens.iter().enumerate().map(|(i, (s, l, u, h, d))| Token::new(i as u32 + 1, s, l, u, *h, d)).collect();
        ParsedSentence::new("t", toks, "").unwrap()
    }

    #[test]
    fn passive_wins_over_active() {
        // "The suspect was told that he could go": auxpass + ccomp on the same verb
        let s = sentence(&[
            ("The", "the", "DET", 2, "det"),
            ("suspect", "suspect", "NOUN", 4, "nsubjpass"),
            ("was", "be", "AUX", 4, "auxpass"),
            ("told", "tell", "VERB", 0, "ROOT"),
            ("that", "that", "SCONJ", 8, "mark"),
            ("he", "he", "PRON", 8, "nsubj"),
            ("could", "could", "AUX", 8, "aux"),
            ("go", "go", "VERB", 4, "ccomp"),
        ]);
        let occ = classify_occurrence(&s, 4).unwrap();
        assert_eq!(occ.label, VoiceLabel::Passive);
        assert_eq!(occ.evidence, Some("nsubjpass"));
        assert!(occ.priority_conflict);
    }

    #[test]
    fn ud2_aliases_classify_identically() {
        let old =
            sentence(&[("cup", "cup", "NOUN", 3, "nsubjpass"), ("was", "be", "AUX", 3, "auxpass"), ("dropped", "drop", "VERB", 0, "root")]);
        let new = sentence(&[
            ("cup", "cup", "NOUN", 3, "nsubj:pass"),
            ("was", "be", "AUX", 3, "aux:pass"),
            ("dropped", "drop", "VERB", 0, "root"),
        ]);
        assert_eq!(classify_occurrence(&old, 3).unwrap().evidence, classify_occurrence(&new, 3).unwrap().evidence);
        let obj = sentence(&[("boys", "boy", "NOUN", 2, "nsubj"), ("drop", "drop", "VERB", 0, "root"), ("cups", "cup", "NOUN", 2, "obj")]);
        let occ = classify_occurrence(&obj, 2).unwrap();
        assert_eq!((occ.label, occ.evidence), (VoiceLabel::Active, Some("dobj")));
    }

    #[test]
    fn errors_on_bad_index_and_non_verbs() {
        let s = sentence(&[("Prices", "price", "NOUN", 2, "nsubj"), ("fell", "fall", "VERB", 0, "root")]);
        assert!(matches!(classify_occurrence(&s, 3), Err(ClassifyError::InvalidIndex { .. })));
        assert!(matches!(classify_occurrence(&s, 0), Err(ClassifyError::InvalidIndex { .. })));
        assert!(matches!(classify_occurrence(&s, 1), Err(ClassifyError::NotVerbal { .. })));
        assert_eq!(classify_occurrence(&s, 2).unwrap().label, VoiceLabel::Other);
    }

    #[test]
    fn empty_corpus_counts_zero() {
        let tally = count_voices(std::iter::empty(), "drop");
        assert_eq!(tally.counts, VoiceCounts::default());
    }

    #[test]
    fn counts_report_round_trip() {
        let mut counts = BTreeMap::new();
        counts.insert("drop".to_string(), VoiceCounts { active: 3279, passive: 1146, other: 12 });
        counts.insert("last".to_string(), VoiceCounts { active: 683, passive: 4, other: 0 });
        let mut buf = Vec::new();
        write_counts_report(&mut buf, &counts).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "lemma\tactive\tpassive\tother\ndrop\t3279\t1146\t12\nlast\t683\t4\t0\n");
        assert_eq!(read_counts_report(&buf[..]).unwrap(), counts);
    }
}
