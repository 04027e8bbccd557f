//! Interpolated Kneser-Ney n-gram model with a single absolute discount.
//!
//! The highest order uses raw counts, lower orders use continuation counts
//! (number of distinct left contexts), and the unigram level interpolates
//! with a uniform distribution over the vocabulary. The vocabulary holds every
//! training token plus `</s>` and `<unk>`; sentences are padded on the left
//! with n-1 `<s>` symbols, which are never predicted.

use std::collections::HashMap;
use std::io::{self, BufRead};

use rayon::prelude::*;
use thiserror::Error;

use super::{tokenize, ScoreError, ScoreRecord, Scorer};
use crate::scalar::Real;

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

#[derive(Debug, Error)]
pub enum NGramError {
    #[error("n-gram order must be at least 1")]
    Order,
    #[error("discount must lie in (0, 1], got {0}")]
    Discount(f64),
    #[error("training corpus has no tokens")]
    EmptyCorpus,
    #[error("reading training text: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Default, Clone)]
struct Level {
    /// Raw counts at the top order, continuation counts below.
    counts: HashMap<Vec<u32>, u64>,
    /// Context → (sum of counts, number of distinct followers).
    contexts: HashMap<Vec<u32>, (u64, u64)>,
}

#[derive(Debug, Clone)]
pub struct NGramModel<T: Real> {
    id: String,
    order: usize,
    discount: T,
    vocab: HashMap<String, u32>,
    words: Vec<String>,
    bos: u32,
    eos: u32,
    unk: u32,
    levels: Vec<Level>,
}

impl<T: Real> NGramModel<T> {
    /// Trains on one sentence per item.
    pub fn train<I, S>(sentences: I, order: usize, discount: f64) -> Result<Self, NGramError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        if order == 0 {
            return Err(NGramError::Order);
        }
        if !(discount > 0.0 && discount <= 1.0) {
            return Err(NGramError::Discount(discount));
        }
        let mut vocab: HashMap<String, u32> = HashMap::new();
        let mut words: Vec<String> = Vec::new();
        let mut intern = |w: &str, vocab: &mut HashMap<String, u32>| -> u32 {
            if let Some(&i) = vocab.get(w) {
                return i;
            }
            let i = words.len() as u32;
            words.push(w.to_string());
            vocab.insert(w.to_string(), i);
            i
        };
        let eos = intern(EOS, &mut vocab);
        let unk = intern(UNK, &mut vocab);
        // BOS is interned but excluded from the predicted vocabulary below.
        let bos = intern(BOS, &mut vocab);

        let mut top: HashMap<Vec<u32>, u64> = HashMap::new();
        let mut n_tokens = 0usize;
        for s in sentences {
            let toks = tokenize(s.as_ref());
            if toks.is_empty() {
                continue;
            }
            n_tokens += toks.len();
            let mut ids = vec![bos; order - 1];
            ids.extend(toks.iter().map(|t| intern(t, &mut vocab)));
            ids.push(eos);
            for end in order - 1..ids.len() {
                *top.entry(ids[end + 1 - order..=end].to_vec()).or_default() += 1;
            }
        }
        if n_tokens == 0 {
            return Err(NGramError::EmptyCorpus);
        }

        let mut levels = vec![Level::default(); order];
        levels[order - 1].counts = top;
        for k in (1..order).rev() {
            let mut cont: HashMap<Vec<u32>, u64> = HashMap::new();
            for key in levels[k].counts.keys() {
                *cont.entry(key[1..].to_vec()).or_default() += 1;
            }
            levels[k - 1].counts = cont;
        }
        for level in &mut levels {
            for (key, &c) in &level.counts {
                let e = level.contexts.entry(key[..key.len() - 1].to_vec()).or_default();
                e.0 += c;
                e.1 += 1;
            }
        }
        Ok(NGramModel {
            id: format!("ngram-o{order}-d{discount}"),
            order,
            discount: T::from_f64_lossy(discount),
            vocab,
            words,
            bos,
            eos,
            unk,
            levels,
        })
    }

    /// Trains on a plaintext file with one sentence per line.
    pub fn train_file(path: impl AsRef<std::path::Path>, order: usize, discount: f64) -> Result<Self, NGramError> {
        let file = std::fs::File::open(path)?;
        let lines: Vec<String> = io::BufReader::new(file).lines().collect::<Result<_, _>>()?;
        Self::train(lines, order, discount)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn discount(&self) -> T {
        self.discount
    }

    /// Predictable vocabulary: training words, `</s>` and `<unk>`.
    pub fn vocabulary(&self) -> impl Iterator<Item = &str> + '_ {
        self.words.iter().enumerate().filter(move |(i, _)| *i as u32 != self.bos).map(|(_, w)| w.as_str())
    }

    pub fn vocab_size(&self) -> usize {
        self.words.len() - 1
    }

    fn word_id(&self, w: &str) -> u32 {
        match self.vocab.get(w) {
            Some(&i) if i != self.bos => i,
            _ => self.unk,
        }
    }

    fn history_ids(&self, history: &[&str]) -> Vec<u32> {
        let want = self.order - 1;
        let mut ids: Vec<u32> = history.iter().map(|w| if *w == BOS { self.bos } else { self.word_id(w) }).collect();
        if ids.len() > want {
            ids.drain(..ids.len() - want);
        }
        while ids.len() < want {
            ids.insert(0, self.bos);
        }
        ids
    }

    fn prob_ids(&self, history: &[u32], word: u32) -> T {
        let d = self.discount;
        let mut p = T::one() / T::from_usize_lossy(self.vocab_size());
        for k in 1..=self.order {
            let ctx = &history[history.len() + 1 - k..];
            let level = &self.levels[k - 1];
            if let Some(&(total, types)) = level.contexts.get(ctx) {
                let total = T::from_usize_lossy(total as usize);
                let mut key = ctx.to_vec();
                key.push(word);
                let c = level.counts.get(&key).copied().unwrap_or(0);
                let c = T::from_usize_lossy(c as usize);
                let head = if c > d { (c - d) / total } else { T::zero() };
                p = head + d * T::from_usize_lossy(types as usize) / total * p;
            }
        }
        p
    }

    /// P(word | history); the history is padded or truncated to n-1 words.
    pub fn prob(&self, history: &[&str], word: &str) -> T {
        let h = self.history_ids(history);
        self.prob_ids(&h, self.word_id(word))
    }

    /// Tokens (including the final `</s>`) and their natural-log probabilities.
    pub fn token_logprobs(&self, text: &str) -> (Vec<String>, Vec<T>) {
        let mut toks = tokenize(text);
        let mut h = vec![self.bos; self.order - 1];
        let mut lps = Vec::with_capacity(toks.len() + 1);
        for t in &toks {
            let w = self.word_id(t);
            lps.push(self.prob_ids(&h[h.len() + 1 - self.order..], w).ln());
            h.push(w);
        }
        lps.push(self.prob_ids(&h[h.len() + 1 - self.order..], self.eos).ln());
        toks.push(EOS.to_string());
        (toks, lps)
    }

    pub fn record(&self, sentence_id: &str, text: &str) -> Result<ScoreRecord, ScoreError> {
        if tokenize(text).is_empty() {
            return Err(ScoreError::EmptySentence(sentence_id.to_string()));
        }
        let (tokens, lps) = self.token_logprobs(text);
        let lps = lps.into_iter().map(Real::to_f64_lossy).collect();
        Ok(ScoreRecord::from_tokens(sentence_id, &self.id, tokens, lps))
    }
}

impl<T: Real> Scorer for NGramModel<T> {
    fn id(&self) -> &str {
        &self.id
    }

    fn score(&mut self, sentence_id: &str, text: &str) -> Result<ScoreRecord, ScoreError> {
        self.record(sentence_id, text)
    }

    /// The model is read-only once trained, so batches are scored in parallel.
    fn score_batch(&mut self, items: &[(String, String)]) -> Vec<Result<ScoreRecord, ScoreError>> {
        let this = &*self;
        items.par_iter().map(|(id, text)| this.record(id, text)).collect()
    }
}
