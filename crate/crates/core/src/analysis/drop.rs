//! Passive drop: mean active score minus mean passive score, for human
//! ratings and model sentence totals alike (positive = passive degraded).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use serde::Serialize;

use super::judgments::JudgmentRow;
use super::stats::{bootstrap_ci, pearson_r, BootstrapCi, Pearson, StatsError};
use crate::scalar::{mean, Real};
use crate::scoring::SuiteScores;
use crate::stimuli::{SentencePair, Voice};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Human,
    Model,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Human => "human",
            Source::Model => "model",
        }
    }
}

/// One score of one version of one pair, from one unit (a participant or a model).
#[derive(Debug, Clone, PartialEq)]
pub struct PairObservation<T> {
    pub pair_id: String,
    pub verb: String,
    pub class: String,
    pub voice: Voice,
    pub unit: String,
    pub value: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassiveDropRecord<T> {
    pub pair_id: String,
    pub verb: String,
    pub class: String,
    pub source: Source,
    pub drop: T,
    pub n_active: usize,
    pub n_passive: usize,
    pub ci: Option<(T, T)>,
}

/// Critical-item ratings as observations; rows without pair metadata are skipped.
pub fn human_observations(rows: &[JudgmentRow]) -> Vec<PairObservation<f64>> {
    rows.iter()
        .filter(|r| !r.is_filler)
        .filter_map(|r| {
            Some(PairObservation {
                pair_id: r.pair_id.clone()?,
                verb: r.verb.clone().unwrap_or_default(),
                class: r.class.clone().unwrap_or_default(),
                voice: r.voice?,
                unit: r.participant_id.clone(),
                value: f64::from(r.score),
            })
        })
        .collect()
}

/// Sentence totals of a scored suite as observations with `unit` = scorer id.
pub fn model_observations(scores: &SuiteScores, pairs: &[SentencePair]) -> Vec<PairObservation<f64>> {
    let index: HashMap<&str, &SentencePair> = pairs.iter().map(|p| (p.pair_id.as_str(), p)).collect();
    let mut out = Vec::new();
    for s in &scores.scored {
        let Some(p) = index.get(s.pair_id.as_str()) else { continue };
        for (voice, rec) in [(Voice::Active, &s.active), (Voice::Passive, &s.passive)] {
            out.push(PairObservation {
                pair_id: p.pair_id.clone(),
                verb: p.verb.clone(),
                class: p.class.clone(),
                voice,
                unit: scores.scorer_id.clone(),
                value: rec.total,
            });
        }
    }
    out
}

fn voice_means<T: Real>(obs: &[&PairObservation<T>]) -> (Option<T>, Option<T>, usize, usize) {
    let a: Vec<T> = obs.iter().filter(|o| o.voice == Voice::Active).map(|o| o.value).collect();
    let p: Vec<T> = obs.iter().filter(|o| o.voice == Voice::Passive).map(|o| o.value).collect();
    (mean(&a), mean(&p), a.len(), p.len())
}

/// Groups observations by pair (first-seen order) and computes each pair's
/// drop. Pairs missing a voice are skipped with a diagnostic.
pub fn passive_drop<T: Real>(obs: &[PairObservation<T>], source: Source) -> (Vec<PassiveDropRecord<T>>, Vec<String>) {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: HashMap<&str, Vec<&PairObservation<T>>> = HashMap::new();
    for o in obs {
        groups
            .entry(&o.pair_id)
            .or_insert_with(|| {
                order.push(&o.pair_id);
                Vec::new()
            })
            .push(o);
    }
    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    for id in order {
        let g = &groups[id];
        match voice_means(g) {
            (Some(a), Some(p), na, np) => records.push(PassiveDropRecord {
                pair_id: id.to_string(),
                verb: g[0].verb.clone(),
                class: g[0].class.clone(),
                source,
                drop: a - p,
                n_active: na,
                n_passive: np,
                ci: None,
            }),
            (a, _, _, _) => {
                let missing = if a.is_none() { "active" } else { "passive" };
                diagnostics.push(format!("pair {id}: no {missing} observations; skipped"));
            }
        }
    }
    (records, diagnostics)
}

/// Mean of all active observations minus mean of all passive observations.
pub fn overall_drop<T: Real>(obs: &[PairObservation<T>]) -> Option<(T, T, T)> {
    let refs: Vec<&PairObservation<T>> = obs.iter().collect();
    match voice_means(&refs) {
        (Some(a), Some(p), _, _) => Some((a, p, a - p)),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupBy {
    Pair,
    Verb,
    Class,
    All,
}

impl GroupBy {
    pub fn as_str(self) -> &'static str {
        match self {
            GroupBy::Pair => "pair",
            GroupBy::Verb => "verb",
            GroupBy::Class => "class",
            GroupBy::All => "all",
        }
    }

    fn key<T>(self, r: &PassiveDropRecord<T>) -> &str {
        match self {
            GroupBy::Pair => &r.pair_id,
            GroupBy::Verb => &r.verb,
            GroupBy::Class => &r.class,
            GroupBy::All => "all",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupDrop<T> {
    pub level: GroupBy,
    pub group: String,
    pub source: Source,
    /// Mean of the pair drops in the group.
    pub mean_drop: T,
    pub n_pairs: usize,
    pub ci: Option<BootstrapCi<T>>,
}

pub fn group_drops<T: Real>(records: &[PassiveDropRecord<T>], by: GroupBy) -> Vec<GroupDrop<T>> {
    let mut groups: BTreeMap<&str, Vec<T>> = BTreeMap::new();
    for r in records {
        groups.entry(by.key(r)).or_default().push(r.drop);
    }
    let source = records.first().map(|r| r.source).unwrap_or(Source::Model);
    groups
        .into_iter()
        .map(|(g, drops)| GroupDrop {
            level: by,
            group: g.to_string(),
            source,
            mean_drop: mean(&drops).unwrap(),
            n_pairs: drops.len(),
            ci: None,
        })
        .collect()
}

/// Group drops with percentile bootstrap intervals, resampling units
/// (participants for human data, models for model data).
pub fn group_drops_with_ci<T: Real>(
    obs: &[PairObservation<T>],
    source: Source,
    by: GroupBy,
    iterations: usize,
    level: f64,
    seed: u64,
) -> Result<Vec<GroupDrop<T>>, StatsError> {
    let (records, _) = passive_drop(obs, source);
    let mut out = group_drops(&records, by);
    let mut by_unit: BTreeMap<&str, Vec<&PairObservation<T>>> = BTreeMap::new();
    for o in obs {
        by_unit.entry(&o.unit).or_default().push(o);
    }
    let units: Vec<Vec<&PairObservation<T>>> = by_unit.into_values().collect();
    if units.len() < 2 {
        return Ok(out);
    }
    for (gi, g) in out.iter_mut().enumerate() {
        let name = g.group.clone();
        let stat = |sample: &[&Vec<&PairObservation<T>>]| -> T {
            let mut sums: HashMap<&str, [(T, usize); 2]> = HashMap::new();
            for o in sample.iter().flat_map(|u| u.iter()) {
                let key = match by {
                    GroupBy::Pair => &o.pair_id,
                    GroupBy::Verb => &o.verb,
                    GroupBy::Class => &o.class,
                    GroupBy::All => "all",
                };
                if key != name {
                    continue;
                }
                let slot = &mut sums.entry(&o.pair_id).or_insert([(T::zero(), 0); 2])[usize::from(o.voice == Voice::Passive)];
                slot.0 = slot.0 + o.value;
                slot.1 += 1;
            }
            let drops: Vec<T> = sums
                .values()
                .filter(|[a, p]| a.1 > 0 && p.1 > 0)
                .map(|[a, p]| a.0 / T::from_usize_lossy(a.1) - p.0 / T::from_usize_lossy(p.1))
                .collect();
            mean(&drops).unwrap_or_else(T::nan)
        };
        // A resample that keeps no pair of the group in both voices yields NaN
        // and is dropped by the bootstrap.
        let ci = bootstrap_ci(&units, stat, iterations, level, seed.wrapping_add(gi as u64))?;
        g.ci = Some(ci);
    }
    Ok(out)
}

/// Pearson r between two sets of pair drops, matched by pair id.
pub fn correlate_drops<T: Real>(a: &[PassiveDropRecord<T>], b: &[PassiveDropRecord<T>]) -> Result<Pearson<T>, StatsError> {
    let index: HashMap<&str, T> = b.iter().map(|r| (r.pair_id.as_str(), r.drop)).collect();
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for r in a {
        if let Some(&v) = index.get(r.pair_id.as_str()) {
            x.push(r.drop);
            y.push(v);
        }
    }
    pearson_r(&x, &y)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaRow<T> {
    /// `pair` or `verb`.
    pub level: &'static str,
    pub key: String,
    pub verb: String,
    pub class: String,
    pub baseline: T,
    pub intervened: T,
    pub delta: T,
    pub mutating: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("score sets cover different pairs: {} only in baseline, {} only in intervened", only_baseline.len(), only_intervened.len())]
pub struct SuiteMismatch {
    pub only_baseline: Vec<String>,
    pub only_intervened: Vec<String>,
}

/// Per-pair and per-verb change in drop from baseline to intervened.
pub fn intervention_delta<T: Real>(
    baseline: &[PassiveDropRecord<T>],
    intervened: &[PassiveDropRecord<T>],
    mutating: &BTreeSet<String>,
) -> Result<Vec<DeltaRow<T>>, SuiteMismatch> {
    let base: BTreeMap<&str, &PassiveDropRecord<T>> = baseline.iter().map(|r| (r.pair_id.as_str(), r)).collect();
    let after: BTreeMap<&str, &PassiveDropRecord<T>> = intervened.iter().map(|r| (r.pair_id.as_str(), r)).collect();
    let only_baseline: Vec<String> = base.keys().filter(|k| !after.contains_key(*k)).map(|k| k.to_string()).collect();
    let only_intervened: Vec<String> = after.keys().filter(|k| !base.contains_key(*k)).map(|k| k.to_string()).collect();
    if !only_baseline.is_empty() || !only_intervened.is_empty() {
        return Err(SuiteMismatch { only_baseline, only_intervened });
    }
    let mut rows = Vec::new();
    let mut per_verb: BTreeMap<&str, (String, Vec<T>, Vec<T>)> = BTreeMap::new();
    for b in baseline {
        let a = after[b.pair_id.as_str()];
        rows.push(DeltaRow {
            level: "pair",
            key: b.pair_id.clone(),
            verb: b.verb.clone(),
            class: b.class.clone(),
            baseline: b.drop,
            intervened: a.drop,
            delta: a.drop - b.drop,
            mutating: mutating.contains(&b.verb),
        });
        let e = per_verb.entry(&b.verb).or_insert_with(|| (b.class.clone(), Vec::new(), Vec::new()));
        e.1.push(b.drop);
        e.2.push(a.drop);
    }
    for (verb, (class, b, a)) in per_verb {
        let (mb, ma) = (mean(&b).unwrap(), mean(&a).unwrap());
        rows.push(DeltaRow {
            level: "verb",
            key: verb.to_string(),
            verb: verb.to_string(),
            class,
            baseline: mb,
            intervened: ma,
            delta: ma - mb,
            mutating: mutating.contains(verb),
        });
    }
    Ok(rows)
}

fn opt<T: Real>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_drop_table<T: Real, W: Write>(out: W, records: &[PassiveDropRecord<T>]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["pair_id", "verb", "class", "source", "drop", "n_active", "n_passive", "ci_low", "ci_high"])?;
    for r in records {
        w.write_record([
            r.pair_id.clone(),
            r.verb.clone(),
            r.class.clone(),
            r.source.as_str().into(),
            r.drop.to_string(),
            r.n_active.to_string(),
            r.n_passive.to_string(),
            opt(r.ci.map(|c| c.0)),
            opt(r.ci.map(|c| c.1)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_group_table<T: Real, W: Write>(out: W, groups: &[GroupDrop<T>]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["level", "group", "source", "mean_drop", "n_pairs", "ci_low", "ci_high", "ci_discarded"])?;
    for g in groups {
        w.write_record([
            g.level.as_str().into(),
            g.group.clone(),
            g.source.as_str().into(),
            g.mean_drop.to_string(),
            g.n_pairs.to_string(),
            opt(g.ci.map(|c| c.low)),
            opt(g.ci.map(|c| c.high)),
            g.ci.map(|c| c.discarded.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_delta_table<T: Real, W: Write>(out: W, rows: &[DeltaRow<T>]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["level", "key", "verb", "class", "baseline_drop", "intervened_drop", "delta", "mutating"])?;
    for r in rows {
        w.write_record([
            r.level.to_string(),
            r.key.clone(),
            r.verb.clone(),
            r.class.clone(),
            r.baseline.to_string(),
            r.intervened.to_string(),
            r.delta.to_string(),
            r.mutating.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Long-format plot data: one row per bar with its interval.
pub fn write_plot_data<T: Real, W: Write>(out: W, panel: &str, groups: &[GroupDrop<T>]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["panel", "x", "y", "ymin", "ymax", "n"])?;
    for g in groups {
        w.write_record([
            panel.to_string(),
            g.group.clone(),
            g.mean_drop.to_string(),
            opt(g.ci.map(|c| c.low)),
            opt(g.ci.map(|c| c.high)),
            g.n_pairs.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads pair drops written by [`write_drop_table`].
pub fn read_drop_table<R: std::io::Read>(input: R) -> Result<Vec<PassiveDropRecord<f64>>, String> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| format!("line {}: {e}", i + 2))?;
        let get = |k: usize| rec.get(k).unwrap_or("").to_string();
        let num = |k: usize| -> Result<usize, String> { get(k).parse().map_err(|_| format!("line {}: bad count", i + 2)) };
        let source = match rec.get(3) {
            Some("human") => Source::Human,
            Some("model") => Source::Model,
            other => return Err(format!("line {}: bad source {other:?}", i + 2)),
        };
        out.push(PassiveDropRecord {
            pair_id: get(0),
            verb: get(1),
            class: get(2),
            source,
            drop: get(4).parse().map_err(|_| format!("line {}: bad drop", i + 2))?,
            n_active: num(5)?,
            n_passive: num(6)?,
            ci: None,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ob(pair: &str, class: &str, voice: Voice, unit: &str, value: f64) -> PairObservation<f64> {
        PairObservation { pair_id: pair.into(), verb: "v".into(), class: class.into(), voice, unit: unit.into(), value }
    }

    #[test]
    fn drop_and_antisymmetry() {
        let obs = vec![
            ob("p1", "c", Voice::Active, "a", 90.0),
            ob("p1", "c", Voice::Passive, "b", 60.0),
            ob("p1", "c", Voice::Passive, "c", 70.0),
        ];
        let (r, d) = passive_drop(&obs, Source::Human);
        assert!(d.is_empty());
        assert_eq!(r[0].drop, 25.0);
        let flipped: Vec<_> = obs
            .iter()
            .cloned()
            .map(|mut o| {
                o.voice = o.voice.flip();
                o
            })
            .collect();
        assert_eq!(passive_drop(&flipped, Source::Human).0[0].drop, -25.0);
    }

    #[test]
    fn missing_voice_is_diagnosed() {
        let obs = vec![ob("p1", "c", Voice::Active, "a", 90.0)];
        let (r, d) = passive_drop(&obs, Source::Human);
        assert!(r.is_empty());
        assert!(d[0].contains("no passive"));
    }

    #[test]
    fn delta_checks_suite() {
        let (r, _) = passive_drop(&[ob("p1", "c", Voice::Active, "m", -5.0), ob("p1", "c", Voice::Passive, "m", -8.0)], Source::Model);
        let rows = intervention_delta(&r, &r, &BTreeSet::new()).unwrap();
        assert!(rows.iter().all(|x| x.delta == 0.0));
        assert_eq!(rows.len(), 2);
        let err = intervention_delta(&r, &[], &BTreeSet::new()).unwrap_err();
        assert_eq!(err.only_baseline, ["p1"]);
    }

    #[test]
    fn drop_table_round_trip() {
        let (r, _) = passive_drop(&[ob("p1", "c", Voice::Active, "m", -5.0), ob("p1", "c", Voice::Passive, "m", -8.5)], Source::Model);
        let mut buf = Vec::new();
        write_drop_table(&mut buf, &r).unwrap();
        assert_eq!(read_drop_table(&buf[..]).unwrap(), r);
    }
}
