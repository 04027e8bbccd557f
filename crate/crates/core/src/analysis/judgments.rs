//! Human acceptability judgments: loading, item metadata and participant exclusion.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io;

use serde::Serialize;

use crate::stimuli::{FillerItem, SentencePair, Voice};

/// The slider midpoint, which participants could not select.
pub const MIDPOINT: u8 = 50;
/// More than this many unexpected filler ratings excludes a participant.
pub const EXCLUSION_THRESHOLD: usize = 15;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JudgmentRow {
    pub participant_id: String,
    pub item_id: String,
    pub score: u8,
    pub is_filler: bool,
    pub expected_acceptable: Option<bool>,
    pub is_attention: bool,
    pub pair_id: Option<String>,
    pub verb: Option<String>,
    pub class: Option<String>,
    pub voice: Option<Voice>,
    pub frame_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowError {
    /// 1-based line in the CSV file, header included.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Default)]
pub struct JudgmentTable {
    pub rows: Vec<JudgmentRow>,
    pub rejected: Vec<RowError>,
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "y" | "t" => Some(true),
        "0" | "false" | "no" | "n" | "f" => Some(false),
        _ => None,
    }
}

fn parse_score(s: &str) -> Result<u8, String> {
    let v: i64 = s.trim().parse().map_err(|_| format!("score {s:?} is not an integer"))?;
    if !(0..=100).contains(&v) {
        return Err(format!("score {v} outside 0..=100"));
    }
    if v == MIDPOINT as i64 {
        return Err("score 50 is not a possible rating".into());
    }
    Ok(v as u8)
}

/// Reads a judgment CSV. Required columns: `participant_id`, `item_id`,
/// `score`. Optional: `is_filler`, `expected_acceptable`, `is_attention`,
/// `pair_id`, `verb`, `class`, `voice`, `frame_id`. Invalid rows are skipped
/// and reported with their line number.
pub fn read_judgments<R: io::Read>(input: R) -> Result<JudgmentTable, String> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(input);
    let headers = reader.headers().map_err(|e| format!("line 1: {e}"))?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let required = |name: &str| col(name).ok_or(format!("line 1: missing required column {name:?}"));
    let (pc, ic, sc) = (required("participant_id")?, required("item_id")?, required("score")?);
    let opt = ["is_filler", "expected_acceptable", "is_attention", "pair_id", "verb", "class", "voice", "frame_id"].map(col);

    let mut table = JudgmentTable::default();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                table.rejected.push(RowError { line, message: e.to_string() });
                continue;
            }
        };
        let field = |c: Option<usize>| c.and_then(|c| rec.get(c)).map(str::trim).filter(|s| !s.is_empty());
        let result = (|| -> Result<JudgmentRow, String> {
            let participant_id = field(Some(pc)).ok_or("empty participant_id")?.to_string();
            let item_id = field(Some(ic)).ok_or("empty item_id")?.to_string();
            let score = parse_score(field(Some(sc)).ok_or("empty score")?)?;
            let flag = |k: usize, name: &str| -> Result<Option<bool>, String> {
                field(opt[k]).map(|v| parse_bool(v).ok_or(format!("{name} {v:?} is not a boolean"))).transpose()
            };
            let voice = match field(opt[6]) {
                None => None,
                Some(v) if v.eq_ignore_ascii_case("active") => Some(Voice::Active),
                Some(v) if v.eq_ignore_ascii_case("passive") => Some(Voice::Passive),
                Some(v) => return Err(format!("voice {v:?} is neither active nor passive")),
            };
            Ok(JudgmentRow {
                participant_id,
                item_id,
                score,
                is_filler: flag(0, "is_filler")?.unwrap_or(false),
                expected_acceptable: flag(1, "expected_acceptable")?,
                is_attention: flag(2, "is_attention")?.unwrap_or(false),
                pair_id: field(opt[3]).map(String::from),
                verb: field(opt[4]).map(String::from),
                class: field(opt[5]).map(String::from),
                voice,
                frame_id: field(opt[7]).map(String::from),
            })
        })();
        match result {
            Ok(row) => table.rows.push(row),
            Err(message) => table.rejected.push(RowError { line, message }),
        }
    }
    Ok(table)
}

/// Fills missing metadata from the stimulus materials, keyed by item id
/// (`{pair_id}:{voice}` or a filler id). Returns ids that match nothing.
pub fn annotate(rows: &mut [JudgmentRow], pairs: &[SentencePair], fillers: &[FillerItem]) -> BTreeSet<String> {
    let pair_index: HashMap<&str, &SentencePair> = pairs.iter().map(|p| (p.pair_id.as_str(), p)).collect();
    let filler_index: HashMap<&str, &FillerItem> = fillers.iter().map(|f| (f.id.as_str(), f)).collect();
    let mut unknown = BTreeSet::new();
    for row in rows {
        if let Some(f) = filler_index.get(row.item_id.as_str()) {
            row.is_filler = true;
            row.expected_acceptable.get_or_insert(f.expected_acceptable);
            row.is_attention |= f.is_attention_check;
            continue;
        }
        let parsed = row.item_id.rsplit_once(':').and_then(|(pair, v)| {
            let voice = match v {
                "active" => Voice::Active,
                "passive" => Voice::Passive,
                _ => return None,
            };
            pair_index.get(pair).map(|p| (*p, voice))
        });
        match parsed {
            Some((p, voice)) => {
                row.pair_id.get_or_insert_with(|| p.pair_id.clone());
                row.verb.get_or_insert_with(|| p.verb.clone());
                row.class.get_or_insert_with(|| p.class.clone());
                row.frame_id.get_or_insert_with(|| p.frame_id.clone());
                row.voice.get_or_insert(voice);
            }
            None if row.is_filler || row.pair_id.is_some() => {}
            None => {
                unknown.insert(row.item_id.clone());
            }
        }
    }
    unknown
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExclusionPolicy {
    pub threshold: usize,
    /// Exclude anyone who fails a single attention check, regardless of count.
    pub attention_hard: bool,
}

impl Default for ExclusionPolicy {
    fn default() -> Self {
        ExclusionPolicy { threshold: EXCLUSION_THRESHOLD, attention_hard: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParticipantCheck {
    pub participant_id: String,
    pub filler_rows: usize,
    pub unexpected: usize,
    pub failed_attention: usize,
    pub excluded: bool,
    pub reason: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Exclusion {
    pub kept: Vec<JudgmentRow>,
    pub excluded: Vec<String>,
    /// Participants with no filler rows; they are excluded, since the rule cannot be applied.
    pub no_fillers: Vec<String>,
    pub checks: Vec<ParticipantCheck>,
}

/// A filler rating on the wrong side of the midpoint.
pub fn is_unexpected(row: &JudgmentRow) -> bool {
    match row.expected_acceptable {
        Some(true) => row.score < MIDPOINT,
        Some(false) => row.score > MIDPOINT,
        None => false,
    }
}

pub fn exclude_participants(rows: &[JudgmentRow], policy: ExclusionPolicy) -> Exclusion {
    let mut stats: BTreeMap<&str, ParticipantCheck> = BTreeMap::new();
    for row in rows {
        let c = stats.entry(&row.participant_id).or_insert_with(|| ParticipantCheck {
            participant_id: row.participant_id.clone(),
            filler_rows: 0,
            unexpected: 0,
            failed_attention: 0,
            excluded: false,
            reason: None,
        });
        if row.is_filler {
            c.filler_rows += 1;
            if is_unexpected(row) {
                c.unexpected += 1;
                if row.is_attention {
                    c.failed_attention += 1;
                }
            }
        }
    }
    let mut excluded = Vec::new();
    let mut no_fillers = Vec::new();
    for c in stats.values_mut() {
        if c.filler_rows == 0 {
            c.reason = Some("no filler ratings".into());
            no_fillers.push(c.participant_id.clone());
        } else if c.unexpected > policy.threshold {
            c.reason = Some(format!("{} unexpected filler ratings", c.unexpected));
        } else if policy.attention_hard && c.failed_attention > 0 {
            c.reason = Some(format!("{} failed attention checks", c.failed_attention));
        }
        if c.reason.is_some() {
            c.excluded = true;
            excluded.push(c.participant_id.clone());
        }
    }
    let out: BTreeSet<&str> = excluded.iter().map(String::as_str).collect();
    let kept = rows.iter().filter(|r| !out.contains(r.participant_id.as_str())).cloned().collect();
    Exclusion { kept, excluded, no_fillers, checks: stats.into_values().collect() }
}
