//! Counterfactual corpus interventions.
//!
//! * Frequency matching removes passive uses of a mutating verb until it has
//!   exactly as many passive uses as a target verb. Removal is by sentence.
//! * Verb transplantation rewrites a fraction of the non-passive sentences of
//!   a donor (target) verb so they use the mutating verb instead, by string
//!   replacement of the inflected forms.
//!
//! Both run in two passes over the corpus. The first pass classifies and
//! collects candidates (a [`Planner`]); the second rewrites sentences one at
//! a time (a [`Plan`]), so the file-to-file path never holds the corpus in
//! memory. Selections are drawn from a seeded ChaCha8 generator.

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{write_sentence, CorpusError, CorpusReader, ParsedSentence, ReadError};
use crate::rng;
use crate::voice::{classify_lemma_in, tally_sentence, VoiceCounts, VoiceLabel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyInterventionSpec {
    pub mutating: String,
    pub target: String,
    pub seed: u64,
    /// Control verbs whose counts are reported before and after.
    #[serde(default)]
    pub watch: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapInterventionSpec {
    pub mutating: String,
    pub target: String,
    pub fraction: f64,
    /// Donor surface form (lowercase) → replacement form.
    pub inflections: BTreeMap<String, String>,
    pub seed: u64,
    #[serde(default)]
    pub watch: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InterventionSpec {
    Frequency(FrequencyInterventionSpec),
    Swap(SwapInterventionSpec),
}

/// On-disk spec file: the spec plus the generator name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecFile {
    #[serde(default = "default_rng")]
    pub rng: String,
    #[serde(flatten)]
    pub spec: InterventionSpec,
}

fn default_rng() -> String {
    rng::RNG_ALGORITHM.to_string()
}

#[derive(Debug, Error)]
pub enum InterventionError {
    #[error("invalid intervention spec: {0}")]
    InvalidSpec(String),
    #[error("lemma {0:?} does not occur as a verb in the corpus")]
    LemmaAbsent(String),
    #[error(
        "target {target:?} has {target_passives} passive uses but mutating {mutating:?} only {mutating_passives}; nothing can be matched"
    )]
    NotEnoughPassives { mutating: String, target: String, mutating_passives: usize, target_passives: usize },
    #[error("inflection map has no entry for donor forms: {}", .0.join(", "))]
    MissingInflections(Vec<String>),
    #[error("cannot read spec file {path}: {message}")]
    SpecFile { path: PathBuf, message: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

impl InterventionSpec {
    pub fn mutating(&self) -> &str {
        match self {
            InterventionSpec::Frequency(s) => &s.mutating,
            InterventionSpec::Swap(s) => &s.mutating,
        }
    }

    pub fn target(&self) -> &str {
        match self {
            InterventionSpec::Frequency(s) => &s.target,
            InterventionSpec::Swap(s) => &s.target,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            InterventionSpec::Frequency(s) => s.seed,
            InterventionSpec::Swap(s) => s.seed,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            InterventionSpec::Frequency(s) => s.seed = seed,
            InterventionSpec::Swap(s) => s.seed = seed,
        }
    }

    fn watch(&self) -> &[String] {
        match self {
            InterventionSpec::Frequency(s) => &s.watch,
            InterventionSpec::Swap(s) => &s.watch,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            InterventionSpec::Frequency(_) => "frequency",
            InterventionSpec::Swap(_) => "swap",
        }
    }

    /// Checks everything that can be checked without the corpus.
    pub fn validate(&self) -> Result<(), InterventionError> {
        let (m, t) = (self.mutating(), self.target());
        if m.trim().is_empty() || t.trim().is_empty() {
            return Err(InterventionError::InvalidSpec("mutating and target lemmas must be non-empty".into()));
        }
        if m.eq_ignore_ascii_case(t) {
            return Err(InterventionError::InvalidSpec(format!("mutating and target lemma are both {m:?}")));
        }
        if let InterventionSpec::Swap(s) = self {
            if !(s.fraction > 0.0 && s.fraction <= 1.0) {
                return Err(InterventionError::InvalidSpec(format!("fraction {} outside (0, 1]", s.fraction)));
            }
            if s.inflections.is_empty() {
                return Err(InterventionError::InvalidSpec("inflection map is empty".into()));
            }
        }
        Ok(())
    }

    /// Lemmas whose counts the report tracks: mutating, target and the watch list.
    pub fn tracked_lemmas(&self) -> BTreeSet<String> {
        let mut set: BTreeSet<String> = self.watch().iter().map(|w| w.to_lowercase()).collect();
        set.insert(self.mutating().to_lowercase());
        set.insert(self.target().to_lowercase());
        set
    }
}

impl SpecFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut file: SpecFile = toml::from_str(text).map_err(|e| e.to_string())?;
        rng::check_algorithm(&file.rng)?;
        if let InterventionSpec::Swap(s) = &mut file.spec {
            s.inflections = s.inflections.iter().map(|(k, v)| (k.to_lowercase(), v.clone())).collect();
        }
        Ok(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, InterventionError> {
        let path = path.as_ref();
        let err = |message: String| InterventionError::SpecFile { path: path.to_path_buf(), message };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        SpecFile::parse(&text).map_err(err)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InterventionReport {
    pub kind: String,
    pub mutating: String,
    pub target: String,
    pub seed: u64,
    pub rng: String,
    pub sentences_in: usize,
    pub sentences_out: usize,
    pub removed: usize,
    pub altered: usize,
    /// Frequency: passive uses of the target (the number to keep).
    /// Swap: size of the donor candidate pool.
    pub pool: usize,
    /// Sentences containing both lemmas (swap: among altered sentences).
    pub both_lemmas: usize,
    pub before: BTreeMap<String, VoiceCounts>,
    pub after: BTreeMap<String, VoiceCounts>,
    pub removed_ids: Vec<String>,
    pub altered_ids: Vec<String>,
    pub diagnostics: Vec<String>,
}

impl InterventionReport {
    /// Change in each tracked lemma's counts, `after - before`.
    pub fn deltas(&self) -> BTreeMap<String, (i64, i64, i64)> {
        self.before
            .iter()
            .map(|(lemma, b)| {
                let a = self.after.get(lemma).copied().unwrap_or_default();
                let d = |x: usize, y: usize| x as i64 - y as i64;
                (lemma.clone(), (d(a.active, b.active), d(a.passive, b.passive), d(a.other, b.other)))
            })
            .collect()
    }

    /// Machine-readable key-value form.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report serializes")
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ =
            writeln!(s, "{} intervention: mutating={} target={} seed={} ({})", self.kind, self.mutating, self.target, self.seed, self.rng);
        let _ = writeln!(
            s,
            "sentences: {} in, {} out, {} removed, {} altered",
            self.sentences_in, self.sentences_out, self.removed, self.altered
        );
        let _ = writeln!(s, "{:<16}{:>20}{:>20}", "lemma", "before a/p/o", "after a/p/o");
        for (lemma, b) in &self.before {
            let a = self.after.get(lemma).copied().unwrap_or_default();
            let _ = writeln!(
                s,
                "{:<16}{:>20}{:>20}",
                lemma,
                format!("{}/{}/{}", b.active, b.passive, b.other),
                format!("{}/{}/{}", a.active, a.passive, a.other)
            );
        }
        for d in &self.diagnostics {
            let _ = writeln!(s, "note: {d}");
        }
        s
    }
}

/// First pass: observe sentences in order, then [`Planner::finish`].
pub struct Planner {
    spec: InterventionSpec,
    tracked: BTreeSet<String>,
    before: BTreeMap<String, VoiceCounts>,
    seen: usize,
    mutating: String,
    target: String,
    // frequency
    passive_sentences: Vec<(usize, usize)>,
    target_passives: usize,
    // swap
    candidates: Vec<usize>,
    both: HashSet<usize>,
    donor_forms: BTreeSet<String>,
    diagnostics: Vec<String>,
}

impl Planner {
    pub fn new(spec: InterventionSpec) -> Result<Self, InterventionError> {
        spec.validate()?;
        let tracked = spec.tracked_lemmas();
        let before = tracked.iter().map(|l| (l.clone(), VoiceCounts::default())).collect();
        Ok(Planner {
            mutating: spec.mutating().to_lowercase(),
            target: spec.target().to_lowercase(),
            spec,
            tracked,
            before,
            seen: 0,
            passive_sentences: Vec::new(),
            target_passives: 0,
            candidates: Vec::new(),
            both: HashSet::new(),
            donor_forms: BTreeSet::new(),
            diagnostics: Vec::new(),
        })
    }

    pub fn observe(&mut self, sentence: &ParsedSentence) {
        let ordinal = self.seen;
        self.seen += 1;
        tally_sentence(sentence, &mut self.before);
        let mutating = classify_lemma_in(sentence, &self.mutating);
        let mutating_passives = mutating.iter().filter(|o| o.label == VoiceLabel::Passive).count();
        match &self.spec {
            InterventionSpec::Frequency(_) => {
                if mutating_passives > 0 {
                    self.passive_sentences.push((ordinal, mutating_passives));
                }
                self.target_passives += classify_lemma_in(sentence, &self.target).iter().filter(|o| o.label == VoiceLabel::Passive).count();
            }
            InterventionSpec::Swap(_) => {
                let donors: Vec<u32> = classify_lemma_in(sentence, &self.target)
                    .into_iter()
                    .filter(|o| o.label != VoiceLabel::Passive)
                    .map(|o| o.token)
                    .collect();
                if donors.is_empty() || mutating_passives > 0 {
                    return;
                }
                if align_tokens(sentence, &donors).is_none() {
                    self.diagnostics.push(format!("sentence {}: donor verb not found in raw text, not eligible", sentence.id));
                    return;
                }
                for &i in &donors {
                    self.donor_forms.insert(sentence.tokens[i as usize - 1].surface.to_lowercase());
                }
                if !mutating.is_empty() {
                    self.both.insert(ordinal);
                }
                self.candidates.push(ordinal);
            }
        }
    }

    pub fn finish(self) -> Result<Plan, InterventionError> {
        let Planner {
            spec,
            tracked,
            before,
            seen,
            mutating,
            target,
            passive_sentences,
            target_passives,
            candidates,
            both,
            donor_forms,
            mut diagnostics,
        } = self;
        let mut rng = rng::seeded(spec.seed());
        let mut action = BTreeMap::new();
        let pool;
        match &spec {
            InterventionSpec::Frequency(_) => {
                for lemma in [&mutating, &target] {
                    if before[lemma.as_str()].total() == 0 {
                        return Err(InterventionError::LemmaAbsent(lemma.clone()));
                    }
                }
                let mutating_passives: usize = passive_sentences.iter().map(|(_, k)| k).sum();
                if mutating_passives < target_passives {
                    return Err(InterventionError::NotEnoughPassives { mutating, target, mutating_passives, target_passives });
                }
                pool = target_passives;
                // Shuffle occurrences, keep whole sentences while the budget allows.
                let mut occurrences: Vec<usize> =
                    passive_sentences.iter().enumerate().flat_map(|(i, (_, k))| std::iter::repeat_n(i, *k)).collect();
                occurrences.shuffle(&mut rng);
                let mut budget = target_passives;
                let mut keep = vec![false; passive_sentences.len()];
                for i in occurrences {
                    if budget == 0 {
                        break;
                    }
                    let k = passive_sentences[i].1;
                    if !keep[i] && k <= budget {
                        keep[i] = true;
                        budget -= k;
                    }
                }
                if budget > 0 {
                    diagnostics.push(format!(
                        "could only keep {} of {} passive uses: remaining sentences hold several each",
                        target_passives - budget,
                        target_passives
                    ));
                }
                for (i, (ordinal, _)) in passive_sentences.iter().enumerate() {
                    if !keep[i] {
                        action.insert(*ordinal, Action::Remove);
                    }
                }
            }
            InterventionSpec::Swap(s) => {
                let missing: Vec<String> = donor_forms.iter().filter(|f| !s.inflections.contains_key(*f)).cloned().collect();
                if !missing.is_empty() {
                    return Err(InterventionError::MissingInflections(missing));
                }
                pool = candidates.len();
                if candidates.is_empty() {
                    diagnostics.push(format!("no non-passive sentences of {target:?} to alter"));
                }
                let n = (s.fraction * candidates.len() as f64 + 1e-9).floor() as usize;
                let mut picked: Vec<usize> = index::sample(&mut rng, candidates.len(), n.min(candidates.len())).into_vec();
                picked.sort_unstable();
                for i in picked {
                    action.insert(candidates[i], Action::Rewrite);
                }
                let altered_both = action.keys().filter(|o| both.contains(o)).count();
                if altered_both > 0 {
                    diagnostics.push(format!("{altered_both} altered sentences already contained {mutating:?}"));
                }
            }
        }
        let both_lemmas = match &spec {
            InterventionSpec::Frequency(_) => 0,
            InterventionSpec::Swap(_) => action.keys().filter(|o| both.contains(o)).count(),
        };
        let report = InterventionReport {
            kind: spec.kind().to_string(),
            mutating: mutating.clone(),
            target: target.clone(),
            seed: spec.seed(),
            rng: rng::RNG_ALGORITHM.to_string(),
            sentences_in: seen,
            pool,
            both_lemmas,
            after: tracked.iter().map(|l| (l.clone(), VoiceCounts::default())).collect(),
            before,
            diagnostics,
            ..Default::default()
        };
        Ok(Plan { spec, mutating, target, action, report })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Action {
    Remove,
    Rewrite,
}

/// Second pass: feed the same sentences in the same order to [`Plan::apply`].
pub struct Plan {
    spec: InterventionSpec,
    mutating: String,
    target: String,
    action: BTreeMap<usize, Action>,
    report: InterventionReport,
}

impl Plan {
    /// Returns the output sentence, or `None` when the sentence is removed.
    pub fn apply<'a>(&mut self, ordinal: usize, sentence: &'a ParsedSentence) -> Option<Cow<'a, ParsedSentence>> {
        let out = match self.action.get(&ordinal) {
            None => Cow::Borrowed(sentence),
            Some(Action::Remove) => {
                self.report.removed += 1;
                self.report.removed_ids.push(sentence.id.clone());
                return None;
            }
            Some(Action::Rewrite) => {
                let InterventionSpec::Swap(spec) = &self.spec else { unreachable!("rewrite only planned for swaps") };
                self.report.altered += 1;
                self.report.altered_ids.push(sentence.id.clone());
                Cow::Owned(transplant(sentence, &self.target, &self.mutating, &spec.inflections))
            }
        };
        self.report.sentences_out += 1;
        tally_sentence(&out, &mut self.report.after);
        Some(out)
    }

    pub fn into_report(self) -> InterventionReport {
        self.report
    }
}

/// Byte offsets of the given tokens' surfaces in `raw_text`, matching tokens
/// left to right. Tokens that cannot be located are skipped unless listed.
fn align_tokens(sentence: &ParsedSentence, required: &[u32]) -> Option<BTreeMap<u32, usize>> {
    let raw = sentence.raw_text.as_str();
    let mut cursor = 0;
    let mut found = BTreeMap::new();
    for tok in &sentence.tokens {
        let must = required.contains(&tok.index);
        match find_word(raw, cursor, &tok.surface, must) {
            Some(pos) => {
                cursor = pos + tok.surface.len();
                if must {
                    found.insert(tok.index, pos);
                }
            }
            None if must => return None,
            None => {}
        }
    }
    Some(found)
}

fn find_word(raw: &str, from: usize, word: &str, whole_word: bool) -> Option<usize> {
    if word.is_empty() {
        return None;
    }
    let mut start = from;
    while let Some(rel) = raw.get(start..)?.find(word) {
        let pos = start + rel;
        let end = pos + word.len();
        let before_ok = raw[..pos].chars().next_back().is_none_or(|c| !c.is_alphanumeric());
        let after_ok = raw[end..].chars().next().is_none_or(|c| !c.is_alphanumeric());
        if !whole_word || (before_ok && after_ok) {
            return Some(pos);
        }
        start = pos + word.chars().next().map_or(1, char::len_utf8);
    }
    None
}

/// Mirrors the capitalization of `original` onto `replacement`.
pub fn match_case(original: &str, replacement: &str) -> String {
    let letters: Vec<char> = original.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.len() > 1 && letters.iter().all(|c| c.is_uppercase()) {
        return replacement.to_uppercase();
    }
    if original.chars().next().is_some_and(char::is_uppercase) {
        let mut chars = replacement.chars();
        return match chars.next() {
            Some(c) => c.to_uppercase().chain(chars).collect(),
            None => String::new(),
        };
    }
    replacement.to_string()
}

fn transplant(sentence: &ParsedSentence, target: &str, mutating: &str, inflections: &BTreeMap<String, String>) -> ParsedSentence {
    let donors: Vec<u32> =
        classify_lemma_in(sentence, target).into_iter().filter(|o| o.label != VoiceLabel::Passive).map(|o| o.token).collect();
    let offsets = align_tokens(sentence, &donors).expect("alignment checked while planning");
    let mut out = sentence.clone();
    // Replace right to left so earlier offsets stay valid.
    for (&index, &pos) in offsets.iter().rev() {
        let tok = &mut out.tokens[index as usize - 1];
        let mapped = &inflections[&tok.surface.to_lowercase()];
        let replacement = match_case(&tok.surface, mapped);
        out.raw_text.replace_range(pos..pos + tok.surface.len(), &replacement);
        tok.surface = replacement;
        tok.lemma = mutating.to_string();
    }
    out
}

fn run_in_memory(
    corpus: &[ParsedSentence],
    spec: InterventionSpec,
) -> Result<(Vec<ParsedSentence>, InterventionReport), InterventionError> {
    let mut planner = Planner::new(spec)?;
    corpus.iter().for_each(|s| planner.observe(s));
    let mut plan = planner.finish()?;
    let out = corpus.iter().enumerate().filter_map(|(i, s)| plan.apply(i, s).map(Cow::into_owned)).collect();
    Ok((out, plan.into_report()))
}

pub fn apply_frequency_intervention(
    corpus: &[ParsedSentence],
    spec: &FrequencyInterventionSpec,
) -> Result<(Vec<ParsedSentence>, InterventionReport), InterventionError> {
    run_in_memory(corpus, InterventionSpec::Frequency(spec.clone()))
}

pub fn apply_swap_intervention(
    corpus: &[ParsedSentence],
    spec: &SwapInterventionSpec,
) -> Result<(Vec<ParsedSentence>, InterventionReport), InterventionError> {
    run_in_memory(corpus, InterventionSpec::Swap(spec.clone()))
}

pub fn apply_intervention(
    corpus: &[ParsedSentence],
    spec: &InterventionSpec,
) -> Result<(Vec<ParsedSentence>, InterventionReport), InterventionError> {
    run_in_memory(corpus, spec.clone())
}

/// Streams `input` twice and writes the intervened corpus to `output`.
///
/// Nothing is written unless planning succeeds. Malformed input sentences are
/// dropped from the output and noted in the report.
pub fn apply_intervention_to_file(input: &Path, output: &Path, spec: &InterventionSpec) -> Result<InterventionReport, InterventionError> {
    let mut planner = Planner::new(spec.clone())?;
    let mut malformed = 0usize;
    for item in CorpusReader::open(input)? {
        match item {
            Ok(s) => planner.observe(&s),
            Err(ReadError::Malformed(_)) => malformed += 1,
            Err(ReadError::Io(e)) => return Err(e.into()),
        }
    }
    let mut plan = planner.finish()?;

    let mut out = BufWriter::new(File::create(output)?);
    let mut ordinal = 0;
    for item in CorpusReader::open(input)? {
        match item {
            Ok(s) => {
                if let Some(kept) = plan.apply(ordinal, &s) {
                    write_sentence(&mut out, &kept)?;
                }
                ordinal += 1;
            }
            Err(ReadError::Malformed(_)) => {}
            Err(ReadError::Io(e)) => return Err(e.into()),
        }
    }
    out.flush()?;
    let mut report = plan.into_report();
    if malformed > 0 {
        report.diagnostics.push(format!("{malformed} malformed input sentences were skipped"));
    }
    Ok(report)
}

pub fn write_report(dir: &Path, stem: &str, report: &InterventionReport) -> io::Result<()> {
    std::fs::write(dir.join(format!("{stem}.toml")), report.to_toml())?;
    std::fs::write(dir.join(format!("{stem}.txt")), report.summary())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{active, intransitive, passive, Np, Verb};
    use crate::voice::count_voices;

    fn drop_v() -> Verb {
        Verb::regular("drop", "dropped")
    }
    fn last_v() -> Verb {
        Verb::regular("last", "lasted")
    }

    fn freq_fixture(drop_passives: usize, last_passives: usize) -> Vec<ParsedSentence> {
        let mut v = Vec::new();
        for i in 0..drop_passives {
            v.push(passive(&format!("dp{i}"), Np("the", "cup"), &drop_v(), Np("a", "boy")));
        }
        for i in 0..8 {
            v.push(active(&format!("da{i}"), Np("a", "boy"), &drop_v(), Np("the", "cup")));
        }
        for i in 0..last_passives {
            v.push(passive(&format!("lp{i}"), Np("an", "hour"), &last_v(), Np("the", "meeting")));
        }
        for i in 0..5 {
            v.push(active(&format!("la{i}"), Np("the", "meeting"), &last_v(), Np("an", "hour")));
        }
        v
    }

    fn freq_spec(seed: u64) -> FrequencyInterventionSpec {
        FrequencyInterventionSpec { mutating: "drop".into(), target: "last".into(), seed, watch: vec![] }
    }

    #[test]
    fn keeps_exactly_target_passive_count() {
        let corpus = freq_fixture(20, 3);
        let (out, report) = apply_frequency_intervention(&corpus, &freq_spec(11)).unwrap();
        let after = count_voices(&out, "drop").counts;
        assert_eq!(after.passive, 3);
        assert_eq!(after.active, 8);
        assert_eq!(report.removed, 17);
        assert_eq!(report.after["drop"], after);
        assert_eq!(report.after["last"], count_voices(&out, "last").counts);
        // kept sentences are untouched and in order
        let kept: Vec<&ParsedSentence> = corpus.iter().filter(|s| !report.removed_ids.contains(&s.id)).collect();
        assert_eq!(kept.len(), out.len());
        assert!(kept.iter().zip(&out).all(|(a, b)| *a == b));
    }

    #[test]
    fn equal_counts_leave_corpus_identical() {
        let corpus = freq_fixture(3, 3);
        let (out, report) = apply_frequency_intervention(&corpus, &freq_spec(1)).unwrap();
        assert_eq!(out, corpus);
        assert_eq!(report.removed, 0);
    }

    #[test]
    fn refuses_when_target_has_more_passives() {
        let corpus = freq_fixture(2, 3);
        assert!(matches!(
            apply_frequency_intervention(&corpus, &freq_spec(1)),
            Err(InterventionError::NotEnoughPassives { mutating_passives: 2, target_passives: 3, .. })
        ));
    }

    #[test]
    fn refuses_absent_lemma_and_identical_lemmas() {
        let corpus = freq_fixture(2, 0);
        let spec = FrequencyInterventionSpec { mutating: "drop".into(), target: "take".into(), seed: 0, watch: vec![] };
        assert!(matches!(apply_frequency_intervention(&corpus, &spec), Err(InterventionError::LemmaAbsent(l)) if l == "take"));
        let spec = FrequencyInterventionSpec { mutating: "drop".into(), target: "Drop".into(), seed: 0, watch: vec![] };
        assert!(matches!(apply_frequency_intervention(&corpus, &spec), Err(InterventionError::InvalidSpec(_))));
    }

    #[test]
    fn different_seeds_keep_different_sentences() {
        let corpus = freq_fixture(20, 3);
        let (_, a) = apply_frequency_intervention(&corpus, &freq_spec(1)).unwrap();
        let (_, b) = apply_frequency_intervention(&corpus, &freq_spec(1)).unwrap();
        let (_, c) = apply_frequency_intervention(&corpus, &freq_spec(2)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.removed_ids, c.removed_ids);
    }

    fn swap_spec(fraction: f64) -> SwapInterventionSpec {
        let inflections = [("dropped", "lasted"), ("dropping", "lasting"), ("drops", "lasts"), ("drop", "last")]
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        SwapInterventionSpec { mutating: "last".into(), target: "drop".into(), fraction, inflections, seed: 5, watch: vec![] }
    }

    fn swap_fixture() -> Vec<ParsedSentence> {
        let mut v = Vec::new();
        for i in 0..6 {
            v.push(active(&format!("a{i}"), Np("a", "boy"), &drop_v(), Np("the", "cup")));
        }
        for i in 0..4 {
            v.push(intransitive(&format!("o{i}"), Np("the", "ball"), &drop_v(), "by", Np("the", "door")));
        }
        // passives of the donor are not candidates
        v.push(passive("p0", Np("the", "cup"), &drop_v(), Np("a", "boy")));
        v.push(passive("lp0", Np("an", "hour"), &last_v(), Np("the", "meeting")));
        v
    }

    #[test]
    fn swap_alters_floor_fraction_of_candidates() {
        let corpus = swap_fixture();
        let (out, report) = apply_swap_intervention(&corpus, &swap_spec(0.3)).unwrap();
        assert_eq!(report.pool, 10);
        assert_eq!(report.altered, 3);
        assert_eq!(out.len(), corpus.len());
        let (_, all) = apply_swap_intervention(&corpus, &swap_spec(1.0)).unwrap();
        assert_eq!(all.altered, 10);
        assert_eq!(count_voices(&out, "last").counts.passive, 1);
        for id in &report.altered_ids {
            let s = out.iter().find(|s| &s.id == id).unwrap();
            assert!(s.raw_text.contains("lasted"), "{}", s.raw_text);
            assert!(!s.raw_text.contains("dropped"));
            assert!(s.tokens.iter().any(|t| t.lemma == "last" && t.surface == "lasted"));
        }
    }

    #[test]
    fn swap_reports_missing_forms_before_anything_else() {
        let mut spec = swap_spec(0.3);
        spec.inflections.remove("dropped");
        match apply_swap_intervention(&swap_fixture(), &spec) {
            Err(InterventionError::MissingInflections(forms)) => assert_eq!(forms, vec!["dropped".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn case_is_mirrored() {
        assert_eq!(match_case("Dropped", "lasted"), "Lasted");
        assert_eq!(match_case("DROPPED", "lasted"), "LASTED");
        assert_eq!(match_case("dropped", "lasted"), "lasted");
    }

    #[test]
    fn whole_word_matching_skips_substrings() {
        assert_eq!(find_word("raindrop drop", 0, "drop", true), Some(9));
        assert_eq!(find_word("dropped", 0, "drop", true), None);
    }

    #[test]
    fn spec_file_parses_both_kinds() {
        let f = SpecFile::parse("kind = \"frequency\"\nmutating = \"drop\"\ntarget = \"last\"\nseed = 3\nwatch = [\"hit\"]\n").unwrap();
        assert_eq!(
            f.spec,
            InterventionSpec::Frequency(FrequencyInterventionSpec {
                mutating: "drop".into(),
                target: "last".into(),
                seed: 3,
                watch: vec!["hit".into()]
            })
        );
        let s = SpecFile::parse("rng = \"chacha8\"\nkind = \"swap\"\nmutating = \"last\"\ntarget = \"drop\"\nfraction = 0.3\nseed = 1\n[inflections]\nDropped = \"lasted\"\n").unwrap();
        match &s.spec {
            InterventionSpec::Swap(sw) => assert_eq!(sw.inflections["dropped"], "lasted"),
            _ => panic!(),
        }
        assert_eq!(SpecFile::parse(&s.to_toml()).unwrap(), s);
        assert!(SpecFile::parse("rng = \"mt\"\nkind = \"frequency\"\nmutating = \"a\"\ntarget = \"b\"\nseed = 1\n").is_err());
    }
}
