//! Verb classes, sentence frames, fillers, minimal-pair generation and
//! counterbalanced presentation lists.
//!
//! The shipped materials live in `data/verb_classes.toml` and
//! `data/fillers.tsv`; [`load_classes`] and [`load_fillers`] read the same
//! formats from disk so other verb classes can be tested without a rebuild.
//!
//! Presentation lists obey three ordering constraints on the critical items:
//!
//! * C1: never three critical items of the same voice in a row;
//! * C2: never two critical items of the same verb class in a row;
//! * C3: every critical item is immediately followed by a filler.
//!
//! Lists are also played in reverse, so every critical item is in fact
//! surrounded by fillers on both sides and C1–C3 hold in both directions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, BufRead, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

const SHIPPED_CLASSES: &str = include_str!("../data/verb_classes.toml");
const SHIPPED_FILLERS: &str = include_str!("../data/fillers.tsv");
const SLOT: &str = "{verb}";
/// Frames per test class.
pub const TEST_FRAMES: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerbEntry {
    pub lemma: String,
    pub past: String,
    pub participle: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameTemplate {
    /// Set only for control classes, whose frames belong to one verb.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verb: Option<String>,
    pub active: String,
    pub passive: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerbClass {
    pub name: String,
    pub control: bool,
    pub verbs: Vec<VerbEntry>,
    pub frames: Vec<FrameTemplate>,
}

#[derive(Debug, Deserialize)]
struct ClassFile {
    class: Vec<VerbClass>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentencePair {
    pub pair_id: String,
    pub class: String,
    pub verb: String,
    pub frame_id: String,
    pub active: String,
    pub passive: String,
    pub is_control: bool,
}

impl SentencePair {
    pub fn item_id(&self, voice: Voice) -> String {
        format!("{}:{}", self.pair_id, voice)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FillerItem {
    pub id: String,
    pub text: String,
    pub expected_acceptable: bool,
    pub is_attention_check: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Voice {
    Active,
    Passive,
}

impl Voice {
    pub fn flip(self) -> Voice {
        match self {
            Voice::Active => Voice::Passive,
            Voice::Passive => Voice::Active,
        }
    }
}

impl fmt::Display for Voice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Voice::Active => "active",
            Voice::Passive => "passive",
        })
    }
}

#[derive(Debug, Error)]
pub enum StimulusError {
    #[error("stimulus data: {0}")]
    Data(String),
    #[error("{path}: {source}")]
    File { path: String, source: io::Error },
    #[error("suite line {line}: {message}")]
    Suite { line: usize, message: String },
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

pub fn parse_classes(text: &str) -> Result<Vec<VerbClass>, StimulusError> {
    let file: ClassFile = toml::from_str(text).map_err(|e| StimulusError::Data(e.to_string()))?;
    for class in &file.class {
        validate_class(class)?;
    }
    Ok(file.class)
}

pub fn shipped_classes() -> Vec<VerbClass> {
    parse_classes(SHIPPED_CLASSES).expect("shipped verb classes are valid")
}

pub fn load_classes(path: impl AsRef<Path>) -> Result<Vec<VerbClass>, StimulusError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| StimulusError::File { path: path.display().to_string(), source })?;
    parse_classes(&text)
}

fn validate_class(class: &VerbClass) -> Result<(), StimulusError> {
    let err = |m: String| Err(StimulusError::Data(format!("class {}: {m}", class.name)));
    if class.verbs.is_empty() {
        return err("no verbs".into());
    }
    for f in &class.frames {
        for t in [&f.active, &f.passive] {
            if t.matches(SLOT).count() != 1 {
                return err(format!("template {t:?} must contain exactly one {SLOT}"));
            }
        }
    }
    let lemmas: BTreeSet<&str> = class.verbs.iter().map(|v| v.lemma.as_str()).collect();
    if class.control {
        for f in &class.frames {
            match &f.verb {
                Some(v) if lemmas.contains(v.as_str()) => {}
                Some(v) => return err(format!("frame names unknown verb {v:?}")),
                None => return err("control frames must name their verb".into()),
            }
        }
        for l in &lemmas {
            if !class.frames.iter().any(|f| f.verb.as_deref() == Some(*l)) {
                return err(format!("verb {l:?} has no frames"));
            }
        }
    } else {
        if class.frames.len() != TEST_FRAMES {
            return err(format!("test classes need {TEST_FRAMES} shared frames, found {}", class.frames.len()));
        }
        if class.frames.iter().any(|f| f.verb.is_some()) {
            return err("test-class frames are shared and must not name a verb".into());
        }
    }
    Ok(())
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase()).filter(|w| !w.is_empty()).collect()
}

fn remove_one(v: &mut Vec<String>, w: &str) -> bool {
    match v.iter().position(|x| x == w) {
        Some(i) => {
            v.remove(i);
            true
        }
        None => false,
    }
}

/// Checks the passive has an auxiliary and by-phrase and shares every content word with the active.
fn check_pair(pair: &SentencePair, verb: &VerbEntry) -> Result<(), StimulusError> {
    let bad = |m: &str| Err(StimulusError::Data(format!("pair {}: {m}", pair.pair_id)));
    let mut active = words(&pair.active);
    let mut passive = words(&pair.passive);
    if !(passive.contains(&"was".to_string()) || passive.contains(&"were".to_string())) {
        return bad("passive has no was/were");
    }
    if !passive.contains(&"by".to_string()) {
        return bad("passive has no by-phrase");
    }
    if !remove_one(&mut active, &verb.past.to_lowercase()) || !remove_one(&mut passive, &verb.participle.to_lowercase()) {
        return bad("verb form missing");
    }
    let aux = if remove_one(&mut passive, "was") { true } else { remove_one(&mut passive, "were") };
    if !aux || !remove_one(&mut passive, "by") {
        return bad("passive frame malformed");
    }
    active.sort();
    passive.sort();
    if active != passive {
        return bad("active and passive do not share their content words");
    }
    Ok(())
}

/// Substitutes every verb into its frames.
pub fn generate_pairs(classes: &[VerbClass]) -> Result<Vec<SentencePair>, StimulusError> {
    let mut pairs = Vec::new();
    let mut ids = BTreeSet::new();
    for class in classes {
        for verb in &class.verbs {
            let frames: Vec<(usize, &FrameTemplate)> = if class.control {
                class.frames.iter().filter(|f| f.verb.as_deref() == Some(verb.lemma.as_str())).enumerate().collect()
            } else {
                class.frames.iter().enumerate().collect()
            };
            for (k, frame) in frames {
                let frame_id =
                    if class.control { format!("{}-{}-f{}", class.name, verb.lemma, k + 1) } else { format!("{}-f{}", class.name, k + 1) };
                let pair = SentencePair {
                    pair_id: format!("{}-{}-{}", class.name, verb.lemma, k + 1),
                    class: class.name.clone(),
                    verb: verb.lemma.clone(),
                    frame_id,
                    active: frame.active.replace(SLOT, &verb.past),
                    passive: frame.passive.replace(SLOT, &verb.participle),
                    is_control: class.control,
                };
                check_pair(&pair, verb)?;
                if !ids.insert(pair.pair_id.clone()) {
                    return Err(StimulusError::Data(format!("duplicate pair id {}", pair.pair_id)));
                }
                pairs.push(pair);
            }
        }
    }
    Ok(pairs)
}

pub fn shipped_pairs() -> Vec<SentencePair> {
    generate_pairs(&shipped_classes()).expect("shipped stimuli are consistent")
}

pub fn parse_fillers(text: &str) -> Result<Vec<FillerItem>, StimulusError> {
    let mut out = Vec::new();
    let mut header_seen = false;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            header_seen = true;
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 5 {
            return Err(StimulusError::Data(format!("fillers line {}: expected 5 columns", i + 1)));
        }
        let flag = |s: &str| match s {
            "1" | "true" => Ok(true),
            "0" | "false" => Ok(false),
            _ => Err(StimulusError::Data(format!("fillers line {}: bad flag {s:?}", i + 1))),
        };
        out.push(FillerItem {
            id: f[0].to_string(),
            expected_acceptable: flag(f[1])?,
            is_attention_check: flag(f[2])?,
            text: f[4].to_string(),
        });
    }
    Ok(out)
}

pub fn shipped_fillers() -> Vec<FillerItem> {
    parse_fillers(SHIPPED_FILLERS).expect("shipped fillers are valid")
}

pub fn load_fillers(path: impl AsRef<Path>) -> Result<Vec<FillerItem>, StimulusError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| StimulusError::File { path: path.display().to_string(), source })?;
    parse_fillers(&text)
}

/// Writes pairs as line-delimited JSON records.
pub fn export_suite<W: Write>(out: &mut W, pairs: &[SentencePair]) -> io::Result<()> {
    for p in pairs {
        serde_json::to_writer(&mut *out, p)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn import_suite<R: BufRead>(input: R) -> Result<Vec<SentencePair>, StimulusError> {
    let mut pairs = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let pair = serde_json::from_str(&line).map_err(|e| StimulusError::Suite { line: i + 1, message: e.to_string() })?;
        pairs.push(pair);
    }
    Ok(pairs)
}

// ---------------------------------------------------------------------------
// Presentation lists

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemKind {
    Active,
    Passive,
    Filler,
}

impl fmt::Display for ItemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ItemKind::Active => "active",
            ItemKind::Passive => "passive",
            ItemKind::Filler => "filler",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ListItem {
    pub item_id: String,
    pub kind: ItemKind,
    /// Verb class for critical items.
    pub class: Option<String>,
}

impl ListItem {
    pub fn is_critical(&self) -> bool {
        self.kind != ItemKind::Filler
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ListId {
    /// 1 or 2.
    pub group: u8,
    /// Half-balanced order within the group, 1 or 2; also the voice set.
    pub order: u8,
    pub reversed: bool,
}

impl fmt::Display for ListId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g{}-o{}-{}", self.group, self.order, if self.reversed { "rev" } else { "fwd" })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PresentationList {
    pub id: ListId,
    pub items: Vec<ListItem>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    /// No three consecutive critical items of the same voice.
    C1,
    /// No two consecutive critical items of the same verb class.
    C2,
    /// Every critical item is immediately followed by a filler.
    C3,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Constraint::C1 => "C1 (at most two consecutive same-voice items)",
            Constraint::C2 => "C2 (no consecutive same-class items)",
            Constraint::C3 => "C3 (filler after every critical item)",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ListError {
    #[error("{constraint} cannot be satisfied: {reason}")]
    Infeasible { constraint: Constraint, reason: String },
    #[error("no ordering found after {attempts} attempts; tightest constraint: {constraint}")]
    SearchExhausted { attempts: usize, constraint: Constraint },
    #[error("invalid list input: {0}")]
    Input(String),
}

impl PresentationList {
    pub fn criticals(&self) -> impl Iterator<Item = &ListItem> {
        self.items.iter().filter(|i| i.is_critical())
    }

    /// Critical item ids in the first and second half of the critical sequence.
    pub fn critical_halves(&self) -> (BTreeSet<String>, BTreeSet<String>) {
        let ids: Vec<&str> = self.criticals().map(|i| i.item_id.as_str()).collect();
        let mid = ids.len() / 2;
        (ids[..mid].iter().map(|s| s.to_string()).collect(), ids[mid..].iter().map(|s| s.to_string()).collect())
    }

    /// First constraint violated, with the offending position.
    pub fn check(&self) -> Result<(), (Constraint, usize)> {
        for (pos, item) in self.items.iter().enumerate() {
            if item.is_critical() && self.items.get(pos + 1).is_none_or(|n| n.is_critical()) {
                return Err((Constraint::C3, pos));
            }
        }
        let crit: Vec<(usize, &ListItem)> = self.items.iter().enumerate().filter(|(_, i)| i.is_critical()).collect();
        for w in crit.windows(2) {
            if w[0].1.class == w[1].1.class {
                return Err((Constraint::C2, w[1].0));
            }
        }
        for w in crit.windows(3) {
            if w[0].1.kind == w[1].1.kind && w[1].1.kind == w[2].1.kind {
                return Err((Constraint::C1, w[2].0));
            }
        }
        Ok(())
    }

    pub fn reversed(&self) -> PresentationList {
        let mut items = self.items.clone();
        items.reverse();
        PresentationList { id: ListId { reversed: !self.id.reversed, ..self.id }, items }
    }

    /// CSV with `position,item_id,kind` (1-based positions).
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "position,item_id,kind")?;
        for (i, item) in self.items.iter().enumerate() {
            writeln!(out, "{},{},{}", i + 1, item.item_id, item.kind)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Crit {
    item_id: String,
    class_name: String,
    class: usize,
    voice: Voice,
}

const GROUPS: usize = 2;
const ATTEMPTS: usize = 64;
const NODE_BUDGET: usize = 200_000;

/// Builds two groups × two half-balanced orders × two directions = 8 lists.
pub fn build_lists(pairs: &[SentencePair], fillers: &[FillerItem], seed: u64) -> Result<Vec<PresentationList>, ListError> {
    if pairs.len() < GROUPS * 2 {
        return Err(ListError::Input(format!("need at least {} pairs, got {}", GROUPS * 2, pairs.len())));
    }
    let class_names: Vec<String> = pairs.iter().map(|p| p.class.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let class_of = |p: &SentencePair| class_names.iter().position(|c| *c == p.class).unwrap();

    let mut root = rng::seeded(seed);
    let groups = assign_groups(pairs, &mut root);
    let largest = groups.iter().map(Vec::len).max().unwrap_or(0);
    if fillers.len() < largest + 1 {
        return Err(ListError::Infeasible {
            constraint: Constraint::C3,
            reason: format!("{} critical items per list need at least {} fillers, got {}", largest, largest + 1, fillers.len()),
        });
    }

    let mut lists = Vec::new();
    for (g, members) in groups.iter().enumerate() {
        let mut members: Vec<&SentencePair> = members.iter().map(|&i| &pairs[i]).collect();
        members.sort_by_key(|p| (class_of(p), p.pair_id.clone()));
        check_group_feasible(&members, &class_of)?;

        let mut last_err = None;
        let mut built = None;
        for attempt in 0..ATTEMPTS {
            let mut rng = rng::substream(root.random(), attempt as u64);
            match build_group(&members, &class_of, fillers, &mut rng) {
                Ok(pair_of_lists) => {
                    built = Some(pair_of_lists);
                    break;
                }
                Err(c) => last_err = Some(c),
            }
        }
        let [first, second] =
            built.ok_or(ListError::SearchExhausted { attempts: ATTEMPTS, constraint: last_err.unwrap_or(Constraint::C2) })?;
        for (o, items) in [first, second].into_iter().enumerate() {
            let list = PresentationList { id: ListId { group: g as u8 + 1, order: o as u8 + 1, reversed: false }, items };
            let rev = list.reversed();
            lists.push(list);
            lists.push(rev);
        }
    }
    Ok(lists)
}

/// Splits each verb's pairs across the groups as evenly as possible,
/// alternating which group receives the extra pair.
fn assign_groups(pairs: &[SentencePair], rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut by_verb: BTreeMap<(String, String), Vec<usize>> = BTreeMap::new();
    for (i, p) in pairs.iter().enumerate() {
        by_verb.entry((p.class.clone(), p.verb.clone())).or_default().push(i);
    }
    let mut verbs: Vec<Vec<usize>> = by_verb.into_values().collect();
    verbs.shuffle(rng);
    let mut groups = vec![Vec::new(); GROUPS];
    let mut extra_to = 0;
    for mut members in verbs {
        members.shuffle(rng);
        let base = members.len() / GROUPS;
        let mut sizes = vec![base; GROUPS];
        for _ in 0..members.len() % GROUPS {
            sizes[extra_to] += 1;
            extra_to = (extra_to + 1) % GROUPS;
        }
        let mut it = members.into_iter();
        for (g, n) in sizes.into_iter().enumerate() {
            groups[g].extend(it.by_ref().take(n));
        }
    }
    groups
}

fn check_group_feasible(members: &[&SentencePair], class_of: &dyn Fn(&SentencePair) -> usize) -> Result<(), ListError> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for p in members {
        *counts.entry(class_of(p)).or_default() += 1;
    }
    let n = members.len();
    // Each half is ordered separately, with roughly half of each class.
    let max = counts.values().copied().max().unwrap_or(0);
    if max > n.div_ceil(2) + 1 {
        return Err(ListError::Infeasible { constraint: Constraint::C2, reason: format!("one class holds {max} of {n} items in a group") });
    }
    Ok(())
}

type GroupLists = [Vec<ListItem>; 2];

fn build_group(
    members: &[&SentencePair],
    class_of: &dyn Fn(&SentencePair) -> usize,
    fillers: &[FillerItem],
    rng: &mut ChaCha8Rng,
) -> Result<GroupLists, Constraint> {
    // Stratify by class: alternate voices (set 1) and halves within each class.
    let mut by_class: BTreeMap<usize, Vec<&SentencePair>> = BTreeMap::new();
    for p in members {
        by_class.entry(class_of(p)).or_default().push(p);
    }
    let mut voice_toggle = rng.random_bool(0.5);
    let mut buckets: BTreeMap<(usize, Voice), Vec<&SentencePair>> = BTreeMap::new();
    for (&class, list) in by_class.iter_mut() {
        list.shuffle(rng);
        for p in list.iter() {
            let voice = if voice_toggle { Voice::Active } else { Voice::Passive };
            voice_toggle = !voice_toggle;
            buckets.entry((class, voice)).or_default().push(p);
        }
    }
    let mut half_toggle = rng.random_bool(0.5);
    let mut halves: [Vec<(&SentencePair, Voice)>; 2] = [Vec::new(), Vec::new()];
    for (&(_, voice), list) in &buckets {
        for p in list {
            halves[half_toggle as usize].push((p, voice));
            half_toggle = !half_toggle;
        }
    }

    let crit = |p: &SentencePair, v: Voice| Crit { item_id: p.item_id(v), class_name: p.class.clone(), class: class_of(p), voice: v };
    let set1_h1: Vec<Crit> = halves[0].iter().map(|(p, v)| crit(p, *v)).collect();
    let set1_h2: Vec<Crit> = halves[1].iter().map(|(p, v)| crit(p, *v)).collect();
    let set2_h1: Vec<Crit> = halves[1].iter().map(|(p, v)| crit(p, v.flip())).collect();
    let set2_h2: Vec<Crit> = halves[0].iter().map(|(p, v)| crit(p, v.flip())).collect();

    // List 1 shows half A first; list 2 shows half B first, in the other voice.
    let mut first = order_critical(set1_h1, &[], rng)?;
    let tail = first.clone();
    first.extend(order_critical(set1_h2, &tail, rng)?);
    let mut second = order_critical(set2_h1, &[], rng)?;
    let tail = second.clone();
    second.extend(order_critical(set2_h2, &tail, rng)?);

    Ok([interleave(&first, fillers, rng), interleave(&second, fillers, rng)])
}

fn can_follow(seq: &[&Crit], next: &Crit) -> bool {
    let n = seq.len();
    if n >= 1 && seq[n - 1].class == next.class {
        return false;
    }
    !(n >= 2 && seq[n - 1].voice == next.voice && seq[n - 2].voice == next.voice)
}

/// Orders items so C1 and C2 hold, continuing after `context`.
///
/// Items of the same (class, voice) type are interchangeable for the
/// constraints, so the search runs over types and fills in items afterwards.
fn order_critical(items: Vec<Crit>, context: &[Crit], rng: &mut ChaCha8Rng) -> Result<Vec<Crit>, Constraint> {
    let mut pools: BTreeMap<(usize, Voice), Vec<Crit>> = BTreeMap::new();
    for it in items {
        pools.entry((it.class, it.voice)).or_default().push(it);
    }
    for pool in pools.values_mut() {
        pool.shuffle(rng);
    }
    let types: Vec<(usize, Voice)> = pools.keys().copied().collect();
    let mut remaining: Vec<usize> = types.iter().map(|t| pools[t].len()).collect();
    let total: usize = remaining.iter().sum();

    let mut chosen: Vec<usize> = Vec::with_capacity(total);
    let mut budget = NODE_BUDGET;
    let ctx_tail: Vec<(usize, Voice)> = context.iter().rev().take(2).rev().map(|c| (c.class, c.voice)).collect();

    fn feasible(types: &[(usize, Voice)], remaining: &[usize], last_class: Option<usize>) -> bool {
        let left: usize = remaining.iter().sum();
        let mut per_class: BTreeMap<usize, usize> = BTreeMap::new();
        let (mut act, mut pas) = (0, 0);
        for (t, &n) in types.iter().zip(remaining) {
            *per_class.entry(t.0).or_default() += n;
            match t.1 {
                Voice::Active => act += n,
                Voice::Passive => pas += n,
            }
        }
        for (&c, &n) in &per_class {
            let cap = if Some(c) == last_class { left / 2 } else { left.div_ceil(2) };
            if n > cap {
                return false;
            }
        }
        act <= 2 * (pas + 1) && pas <= 2 * (act + 1)
    }

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        types: &[(usize, Voice)],
        remaining: &mut [usize],
        chosen: &mut Vec<usize>,
        ctx: &[(usize, Voice)],
        total: usize,
        budget: &mut usize,
        rng: &mut ChaCha8Rng,
    ) -> bool {
        if chosen.len() == total {
            return true;
        }
        if *budget == 0 {
            return false;
        }
        *budget -= 1;
        let tail: Vec<(usize, Voice)> = ctx.iter().copied().chain(chosen.iter().map(|&t| types[t])).collect();
        let mut order: Vec<usize> = (0..types.len()).filter(|&t| remaining[t] > 0).collect();
        order.shuffle(rng);
        // Largest pools first keeps the tail feasible; shuffling breaks ties.
        order.sort_by_key(|&t| std::cmp::Reverse(remaining[t]));
        for t in order {
            let (class, voice) = types[t];
            let n = tail.len();
            if n >= 1 && tail[n - 1].0 == class {
                continue;
            }
            if n >= 2 && tail[n - 1].1 == voice && tail[n - 2].1 == voice {
                continue;
            }
            remaining[t] -= 1;
            if feasible(types, remaining, Some(class)) {
                chosen.push(t);
                if dfs(types, remaining, chosen, ctx, total, budget, rng) {
                    return true;
                }
                chosen.pop();
            }
            remaining[t] += 1;
        }
        false
    }

    let last_class = ctx_tail.last().map(|c| c.0);
    if !feasible(&types, &remaining, last_class) {
        return Err(voice_or_class(&types, &remaining));
    }
    if !dfs(&types, &mut remaining, &mut chosen, &ctx_tail, total, &mut budget, rng) {
        return Err(voice_or_class(&types, &pools.values().map(Vec::len).collect::<Vec<_>>()));
    }
    let mut out = Vec::with_capacity(total);
    for t in chosen {
        out.push(pools.get_mut(&types[t]).unwrap().pop().unwrap());
    }
    debug_assert!({
        let all: Vec<&Crit> = context.iter().chain(out.iter()).collect();
        (1..all.len()).all(|i| can_follow(&all[..i], all[i]))
    });
    Ok(out)
}

fn voice_or_class(types: &[(usize, Voice)], counts: &[usize]) -> Constraint {
    let (mut act, mut pas) = (0, 0);
    for (t, &n) in types.iter().zip(counts) {
        match t.1 {
            Voice::Active => act += n,
            Voice::Passive => pas += n,
        }
    }
    if act > 2 * (pas + 1) || pas > 2 * (act + 1) {
        Constraint::C1
    } else {
        Constraint::C2
    }
}

/// Places every filler so each critical item has a filler on both sides.
fn interleave(critical: &[Crit], fillers: &[FillerItem], rng: &mut ChaCha8Rng) -> Vec<ListItem> {
    let gaps = critical.len() + 1;
    let mut per_gap = vec![1usize; gaps];
    for _ in 0..fillers.len() - gaps {
        per_gap[rng.random_range(0..gaps)] += 1;
    }
    let mut order: Vec<&FillerItem> = fillers.iter().collect();
    order.shuffle(rng);
    let mut fill = order.into_iter();
    let mut items = Vec::with_capacity(critical.len() + fillers.len());
    for (g, n) in per_gap.into_iter().enumerate() {
        for f in fill.by_ref().take(n) {
            items.push(ListItem { item_id: f.id.clone(), kind: ItemKind::Filler, class: None });
        }
        if let Some(c) = critical.get(g) {
            let kind = match c.voice {
                Voice::Active => ItemKind::Active,
                Voice::Passive => ItemKind::Passive,
            };
            items.push(ListItem { item_id: c.item_id.clone(), kind, class: Some(c.class_name.clone()) });
        }
    }
    items
}
