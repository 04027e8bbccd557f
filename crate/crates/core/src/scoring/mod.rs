//! Sentence scoring as summed token log-probabilities (natural log).
//!
//! [`Scorer`] is implemented by the built-in [`NGramModel`] and by
//! [`ExternalScorer`], a client for child processes speaking the line
//! protocol in [`protocol`].

mod ngram;
pub mod protocol;

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stimuli::{SentencePair, Voice};

pub use ngram::{NGramError, NGramModel, BOS, EOS, UNK};
pub use protocol::{serve_protocol, ExternalScorer};

/// Tolerance on `total` against the sum of token log-probabilities.
pub const TOTAL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub sentence_id: String,
    pub scorer_id: String,
    pub tokens: Vec<String>,
    pub token_logprobs: Vec<f64>,
    pub total: f64,
}

impl ScoreRecord {
    /// Builds a record whose total is the sum of `token_logprobs`.
    pub fn from_tokens(sentence_id: &str, scorer_id: &str, tokens: Vec<String>, token_logprobs: Vec<f64>) -> Self {
        let total = token_logprobs.iter().sum();
        ScoreRecord { sentence_id: sentence_id.into(), scorer_id: scorer_id.into(), tokens, token_logprobs, total }
    }
}

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("sentence {0}: empty sentence cannot be scored")]
    EmptySentence(String),
    #[error("sentence {id}: scorer reported: {message}")]
    Rejected { id: String, message: String },
    #[error("sentence {id}: protocol violation: {message}")]
    Protocol { id: String, message: String },
    #[error("scorer process: {0}")]
    Process(String),
    #[error("I/O error talking to scorer: {0}")]
    Io(#[from] io::Error),
}

pub trait Scorer {
    fn id(&self) -> &str;

    fn score(&mut self, sentence_id: &str, text: &str) -> Result<ScoreRecord, ScoreError>;

    /// Scores many sentences; results are in input order.
    fn score_batch(&mut self, items: &[(String, String)]) -> Vec<Result<ScoreRecord, ScoreError>> {
        items.iter().map(|(id, text)| self.score(id, text)).collect()
    }
}

/// Lowercases and splits on whitespace; punctuation marks become their own
/// tokens, apostrophes inside words are kept.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let mut word = String::new();
        for (i, &c) in chars.iter().enumerate() {
            let inner_apostrophe =
                (c == '\'' || c == '’') && i > 0 && i + 1 < chars.len() && chars[i - 1].is_alphanumeric() && chars[i + 1].is_alphanumeric();
            if c.is_alphanumeric() || inner_apostrophe {
                word.extend(c.to_lowercase());
            } else {
                if !word.is_empty() {
                    out.push(std::mem::take(&mut word));
                }
                out.push(c.to_string());
            }
        }
        if !word.is_empty() {
            out.push(word);
        }
    }
    out
}

pub fn score_sentence<S: Scorer + ?Sized>(scorer: &mut S, sentence_id: &str, text: &str) -> Result<ScoreRecord, ScoreError> {
    scorer.score(sentence_id, text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub pair_id: String,
    pub active: ScoreRecord,
    pub passive: ScoreRecord,
}

impl PairScore {
    /// Active total minus passive total; positive means the passive is degraded.
    pub fn drop(&self) -> f64 {
        self.active.total - self.passive.total
    }
}

#[derive(Debug)]
pub struct PairFailure {
    pub pair_id: String,
    pub error: ScoreError,
}

#[derive(Debug, Default)]
pub struct SuiteScores {
    pub scorer_id: String,
    pub scored: Vec<PairScore>,
    pub failures: Vec<PairFailure>,
}

/// Scores both members of every pair with one scorer. Failures are kept
/// per pair; the other pairs are still scored.
pub fn score_suite<S: Scorer + ?Sized>(scorer: &mut S, pairs: &[SentencePair]) -> SuiteScores {
    let items: Vec<(String, String)> =
        pairs.iter().flat_map(|p| [(p.item_id(Voice::Active), p.active.clone()), (p.item_id(Voice::Passive), p.passive.clone())]).collect();
    let mut results = scorer.score_batch(&items).into_iter();
    let mut out = SuiteScores { scorer_id: scorer.id().to_string(), ..Default::default() };
    for p in pairs {
        let (a, b) = (results.next(), results.next());
        match (a, b) {
            (Some(Ok(active)), Some(Ok(passive))) => out.scored.push(PairScore { pair_id: p.pair_id.clone(), active, passive }),
            (Some(Err(error)), _) | (_, Some(Err(error))) => out.failures.push(PairFailure { pair_id: p.pair_id.clone(), error }),
            _ => out.failures.push(PairFailure {
                pair_id: p.pair_id.clone(),
                error: ScoreError::Process("scorer returned fewer results than requests".into()),
            }),
        }
    }
    out
}

/// `sentence_id, scorer_id, total, n_tokens, tokens, token_logprobs` with
/// space-joined token columns.
pub fn write_score_table<W: Write>(out: W, scores: &SuiteScores) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sentence_id", "scorer_id", "total", "n_tokens", "tokens", "token_logprobs"])?;
    for p in &scores.scored {
        for r in [&p.active, &p.passive] {
            let lps: Vec<String> = r.token_logprobs.iter().map(|x| format!("{x:?}")).collect();
            w.write_record([
                r.sentence_id.as_str(),
                r.scorer_id.as_str(),
                &format!("{:?}", r.total),
                &r.tokens.len().to_string(),
                &r.tokens.join(" "),
                &lps.join(" "),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Sentence totals keyed by sentence id from a table written by [`write_score_table`]
/// (or any CSV with `sentence_id` and `total` columns).
pub fn read_score_totals<R: io::Read>(input: R) -> Result<BTreeMap<String, f64>, String> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(|e| e.to_string())?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).ok_or(format!("missing column {name:?}"));
    let (id_col, total_col) = (col("sentence_id")?, col("total")?);
    let mut out = BTreeMap::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| format!("line {}: {e}", i + 2))?;
        let total: f64 = rec[total_col].trim().parse().map_err(|_| format!("line {}: bad total {:?}", i + 2, &rec[total_col]))?;
        if !total.is_finite() {
            return Err(format!("line {}: total is not finite", i + 2));
        }
        out.insert(rec[id_col].to_string(), total);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinimalPair {
    pub id: String,
    pub good: String,
    pub bad: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Accuracy {
    pub correct: usize,
    pub ties: usize,
    pub total: usize,
}

impl Accuracy {
    /// Fraction with score(good) strictly above score(bad).
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }
}

/// Reads BLiMP-style JSONL (`sentence_good`, `sentence_bad`, optional `pair_id`/`UID`).
pub fn read_minimal_pairs<R: BufRead>(input: R) -> Result<Vec<MinimalPair>, String> {
    #[derive(Deserialize)]
    struct Row {
        sentence_good: String,
        sentence_bad: String,
        #[serde(default)]
        pair_id: Option<serde_json::Value>,
    }
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Row = serde_json::from_str(&line).map_err(|e| format!("line {}: {e}", i + 1))?;
        let id = match row.pair_id {
            Some(serde_json::Value::String(s)) => s,
            Some(v) => v.to_string(),
            None => format!("pair-{}", out.len() + 1),
        };
        out.push(MinimalPair { id, good: row.sentence_good, bad: row.sentence_bad });
    }
    Ok(out)
}

/// Accuracy over pairs that scored successfully; failures are returned separately.
pub fn minimal_pair_accuracy<S: Scorer + ?Sized>(scorer: &mut S, pairs: &[MinimalPair]) -> (Accuracy, Vec<PairFailure>) {
    let items: Vec<(String, String)> =
        pairs.iter().flat_map(|p| [(format!("{}:good", p.id), p.good.clone()), (format!("{}:bad", p.id), p.bad.clone())]).collect();
    let mut results = scorer.score_batch(&items).into_iter();
    let mut acc = Accuracy { correct: 0, ties: 0, total: 0 };
    let mut failures = Vec::new();
    for p in pairs {
        match (results.next(), results.next()) {
            (Some(Ok(good)), Some(Ok(bad))) => {
                acc.total += 1;
                if good.total > bad.total {
                    acc.correct += 1;
                } else if good.total == bad.total {
                    acc.ties += 1;
                }
            }
            (Some(Err(error)), _) | (_, Some(Err(error))) => failures.push(PairFailure { pair_id: p.id.clone(), error }),
            _ => failures.push(PairFailure { pair_id: p.id.clone(), error: ScoreError::Process("missing result".into()) }),
        }
    }
    (acc, failures)
}
