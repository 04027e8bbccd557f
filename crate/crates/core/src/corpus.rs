//! Parsed-corpus data model and the 10-column dependency interchange format.
//!
//! Files follow the CoNLL-U layout: one token per line with ten
//! tab-separated fields (`ID FORM LEMMA UPOS XPOS FEATS HEAD DEPREL DEPS MISC`),
//! a blank line after each sentence, and `# sent_id = ...` / `# text = ...`
//! comment lines. Multiword-token ranges (`3-4`) and empty nodes (`5.1`) are
//! skipped on read; the classifier only looks at basic dependency edges.
//!
//! Malformed sentences never abort a read. The reader yields a
//! [`ReadError::Malformed`] carrying the line number and moves on to the
//! next sentence; only I/O failures end iteration.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Placeholder for an empty column.
const EMPTY: &str = "_";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    /// 1-based position in the sentence.
    pub index: u32,
    pub surface: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
    pub feats: String,
    /// Index of the governing token, 0 for the root.
    pub head: u32,
    pub deprel: String,
    pub deps: String,
    pub misc: String,
}

impl Token {
    /// Token with only the fields the toolkit reads; the rest are `_`.
    pub fn new(index: u32, surface: &str, lemma: &str, upos: &str, head: u32, deprel: &str) -> Self {
        Token {
            index,
            surface: surface.to_string(),
            lemma: lemma.to_string(),
            upos: upos.to_string(),
            xpos: EMPTY.to_string(),
            feats: EMPTY.to_string(),
            head,
            deprel: deprel.to_string(),
            deps: EMPTY.to_string(),
            misc: EMPTY.to_string(),
        }
    }

    pub fn is_verbal(&self) -> bool {
        matches!(self.upos.as_str(), "VERB" | "AUX")
    }

    fn space_after(&self) -> bool {
        !self.misc.split('|').any(|m| m == "SpaceAfter=No")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedSentence {
    pub id: String,
    pub tokens: Vec<Token>,
    pub raw_text: String,
    /// Comment lines other than `sent_id` and `text`, without the leading `#`.
    pub comments: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct SentenceError(String);

impl ParsedSentence {
    /// Builds a sentence and checks the tree invariants.
    pub fn new(id: impl Into<String>, tokens: Vec<Token>, raw_text: impl Into<String>) -> Result<Self, SentenceError> {
        let sentence = ParsedSentence { id: id.into(), tokens, raw_text: raw_text.into(), comments: Vec::new() };
        sentence.validate()?;
        Ok(sentence)
    }

    /// Contiguous indices, a single root, in-range heads and no cycles.
    pub fn validate(&self) -> Result<(), SentenceError> {
        if self.tokens.is_empty() {
            return Err(SentenceError("sentence has no tokens".into()));
        }
        let n = self.tokens.len() as u32;
        let mut roots = 0;
        for (pos, tok) in self.tokens.iter().enumerate() {
            let expected = pos as u32 + 1;
            if tok.index != expected {
                return Err(SentenceError(format!("token index {} where {} was expected", tok.index, expected)));
            }
            if tok.head > n {
                return Err(SentenceError(format!("token {} has head {} outside 0..={}", tok.index, tok.head, n)));
            }
            if tok.head == tok.index {
                return Err(SentenceError(format!("token {} is its own head", tok.index)));
            }
            if tok.deprel.is_empty() || tok.deprel == EMPTY {
                return Err(SentenceError(format!("token {} has no dependency relation", tok.index)));
            }
            if tok.head == 0 {
                roots += 1;
            }
        }
        if roots != 1 {
            return Err(SentenceError(format!("expected exactly one root, found {roots}")));
        }
        // Every chain of heads must reach the root within n steps.
        for tok in &self.tokens {
            let mut cur = tok.head;
            let mut steps = 0;
            while cur != 0 {
                steps += 1;
                if steps > n {
                    return Err(SentenceError(format!("cycle through token {}", tok.index)));
                }
                cur = self.tokens[cur as usize - 1].head;
            }
        }
        Ok(())
    }

    /// Token at a 1-based index.
    pub fn token(&self, index: u32) -> Option<&Token> {
        index.checked_sub(1).and_then(|i| self.tokens.get(i as usize))
    }

    /// Dependents of the token at `index`, in sentence order.
    pub fn children(&self, index: u32) -> impl Iterator<Item = &Token> {
        self.tokens.iter().filter(move |t| t.head == index)
    }

    /// Surface text rebuilt from token forms, honouring `SpaceAfter=No`.
    pub fn detokenize(tokens: &[Token]) -> String {
        let mut out = String::new();
        for (i, tok) in tokens.iter().enumerate() {
            out.push_str(&tok.surface);
            if i + 1 < tokens.len() && tok.space_after() {
                out.push(' ');
            }
        }
        out
    }
}

/// A malformed sentence found while reading.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// 1-based line where the offending sentence (or line) starts.
    pub line: usize,
    pub sentence_id: Option<String>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.sentence_id {
            Some(id) => write!(f, "line {} (sentence {}): {}", self.line, id, self.message),
            None => write!(f, "line {}: {}", self.line, self.message),
        }
    }
}

#[derive(Debug, Error)]
pub enum ReadError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("malformed sentence at {0}")]
    Malformed(Diagnostic),
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot open {path}: {source}")]
    Open { path: PathBuf, source: io::Error },
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("duplicate sentence id {0}")]
    DuplicateId(String),
    #[error("lemma set is empty")]
    EmptyLemmaSet,
}

/// Streaming reader over a columnar parsed file.
pub struct CorpusReader<R> {
    input: R,
    line_no: usize,
    doc_id: String,
    doc_ordinal: usize,
    buf: String,
    finished: bool,
}

impl CorpusReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| CorpusError::Open { path: path.to_path_buf(), source })?;
        Ok(CorpusReader::new(BufReader::new(file)))
    }
}

impl<R: BufRead> CorpusReader<R> {
    pub fn new(input: R) -> Self {
        CorpusReader { input, line_no: 0, doc_id: "doc".to_string(), doc_ordinal: 0, buf: String::new(), finished: false }
    }

    /// Collects the raw lines of the next sentence block with their line numbers.
    fn next_block(&mut self) -> io::Result<Option<Vec<(usize, String)>>> {
        let mut block = Vec::new();
        loop {
            self.buf.clear();
            let read = self.input.read_line(&mut self.buf)?;
            if read == 0 {
                return Ok(if block.is_empty() { None } else { Some(block) });
            }
            self.line_no += 1;
            let line = self.buf.trim_end_matches(['\n', '\r']);
            if line.trim().is_empty() {
                if block.is_empty() {
                    continue;
                }
                return Ok(Some(block));
            }
            block.push((self.line_no, line.to_string()));
        }
    }

    fn parse_block(&mut self, block: Vec<(usize, String)>) -> Result<ParsedSentence, Diagnostic> {
        let start = block[0].0;
        let mut sent_id = None;
        let mut text = None;
        let mut comments = Vec::new();
        let mut tokens = Vec::new();
        let mut first_error: Option<Diagnostic> = None;

        for (line_no, line) in &block {
            if let Some(comment) = line.strip_prefix('#') {
                let body = comment.trim();
                if let Some(v) = key_value(body, "sent_id") {
                    sent_id = Some(v.to_string());
                } else if let Some(v) = key_value(body, "text") {
                    text = Some(v.to_string());
                } else {
                    if let Some(v) = key_value(body, "newdoc id") {
                        self.doc_id = v.to_string();
                        self.doc_ordinal = 0;
                    }
                    comments.push(comment.strip_prefix(' ').unwrap_or(comment).to_string());
                }
                continue;
            }
            if first_error.is_some() {
                continue;
            }
            match parse_token_line(line) {
                Ok(Some(tok)) => tokens.push(tok),
                Ok(None) => log::debug!("line {line_no}: skipping multiword or empty-node line"),
                Err(msg) => first_error = Some(Diagnostic { line: *line_no, sentence_id: None, message: msg }),
            }
        }

        self.doc_ordinal += 1;
        let id = sent_id.unwrap_or_else(|| format!("{}-{}", self.doc_id, self.doc_ordinal));
        if let Some(mut diag) = first_error {
            diag.sentence_id = Some(id);
            return Err(diag);
        }
        let raw_text = text.unwrap_or_else(|| ParsedSentence::detokenize(&tokens));
        let sentence = ParsedSentence { id, tokens, raw_text, comments };
        sentence.validate().map_err(|e| Diagnostic { line: start, sentence_id: Some(sentence.id.clone()), message: e.0 })?;
        Ok(sentence)
    }
}

impl<R: BufRead> Iterator for CorpusReader<R> {
    type Item = Result<ParsedSentence, ReadError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.finished {
            return None;
        }
        match self.next_block() {
            Ok(Some(block)) => Some(self.parse_block(block).map_err(|d| {
                log::warn!("skipping malformed sentence: {d}");
                ReadError::Malformed(d)
            })),
            Ok(None) => {
                self.finished = true;
                None
            }
            Err(e) => {
                self.finished = true;
                Some(Err(ReadError::Io(e)))
            }
        }
    }
}

fn key_value<'a>(body: &'a str, key: &str) -> Option<&'a str> {
    let rest = body.strip_prefix(key)?.trim_start();
    let value = rest.strip_prefix('=')?;
    Some(value.strip_prefix(' ').unwrap_or(value))
}

fn parse_token_line(line: &str) -> Result<Option<Token>, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 10 {
        return Err(format!("expected 10 tab-separated fields, found {}", fields.len()));
    }
    if fields[0].contains(['-', '.']) {
        return Ok(None);
    }
    let index: u32 = fields[0].parse().map_err(|_| format!("invalid token index {:?}", fields[0]))?;
    if index == 0 {
        return Err("token index must be at least 1".into());
    }
    let head: u32 = fields[6].parse().map_err(|_| format!("invalid head {:?}", fields[6]))?;
    Ok(Some(Token {
        index,
        surface: fields[1].to_string(),
        lemma: fields[2].to_string(),
        upos: fields[3].to_string(),
        xpos: fields[4].to_string(),
        feats: fields[5].to_string(),
        head,
        deprel: fields[7].to_string(),
        deps: fields[8].to_string(),
        misc: fields[9].to_string(),
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadMode {
    /// Lazily parse one sentence at a time.
    Streaming,
    /// Load the whole file first, then iterate the in-memory copy.
    Indexed,
}

/// Sentences from [`read_parsed_corpus`] in file order, malformed ones as errors.
pub enum SentenceStream {
    Streaming(CorpusReader<BufReader<File>>),
    Indexed(std::vec::IntoIter<Result<ParsedSentence, ReadError>>),
}

impl Iterator for SentenceStream {
    type Item = Result<ParsedSentence, ReadError>;

    fn next(&mut self) -> Option<Self::Item> {
        match self {
            SentenceStream::Streaming(r) => r.next(),
            SentenceStream::Indexed(it) => it.next(),
        }
    }
}

pub fn read_parsed_corpus(path: impl AsRef<Path>, mode: ReadMode) -> Result<SentenceStream, CorpusError> {
    let reader = CorpusReader::open(path)?;
    match mode {
        ReadMode::Streaming => Ok(SentenceStream::Streaming(reader)),
        ReadMode::Indexed => {
            let mut items = Vec::new();
            for item in reader {
                match item {
                    Err(ReadError::Io(e)) => return Err(CorpusError::Io(e)),
                    other => items.push(other),
                }
            }
            Ok(SentenceStream::Indexed(items.into_iter()))
        }
    }
}

/// In-memory corpus with unique sentence ids.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub sources: Vec<PathBuf>,
    sentences: Vec<ParsedSentence>,
    /// Malformed sentences skipped while loading.
    pub diagnostics: Vec<Diagnostic>,
}

impl Corpus {
    pub fn from_sentences(sentences: Vec<ParsedSentence>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(sentences.len());
        for s in &sentences {
            if !seen.insert(s.id.as_str()) {
                return Err(CorpusError::DuplicateId(s.id.clone()));
            }
        }
        Ok(Corpus { sources: Vec::new(), sentences, diagnostics: Vec::new() })
    }

    /// Reads a file, skipping malformed sentences and recording them in `diagnostics`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let mut sentences = Vec::new();
        let mut diagnostics = Vec::new();
        for item in read_parsed_corpus(path, ReadMode::Streaming)? {
            match item {
                Ok(s) => sentences.push(s),
                Err(ReadError::Malformed(d)) => diagnostics.push(d),
                Err(ReadError::Io(e)) => return Err(CorpusError::Io(e)),
            }
        }
        let mut corpus = Corpus::from_sentences(sentences)?;
        corpus.sources.push(path.to_path_buf());
        corpus.diagnostics = diagnostics;
        Ok(corpus)
    }

    pub fn sentences(&self) -> &[ParsedSentence] {
        &self.sentences
    }

    pub fn into_sentences(self) -> Vec<ParsedSentence> {
        self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn lemma_index(&self, lemmas: &BTreeSet<String>) -> Result<LemmaIndex, CorpusError> {
        build_lemma_index(&self.sentences, lemmas)
    }
}

/// One verbal use of a lemma.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Occurrence {
    /// Position of the sentence in the input stream (0-based).
    pub ordinal: usize,
    pub sentence_id: String,
    pub token: u32,
}

/// lemma → occurrences in corpus order.
pub type LemmaIndex = BTreeMap<String, Vec<Occurrence>>;

/// Indexes VERB/AUX tokens whose lemma is in `lemmas`.
pub fn build_lemma_index<'a, I>(sentences: I, lemmas: &BTreeSet<String>) -> Result<LemmaIndex, CorpusError>
where
    I: IntoIterator<Item = &'a ParsedSentence>,
{
    if lemmas.is_empty() {
        return Err(CorpusError::EmptyLemmaSet);
    }
    let wanted: BTreeSet<String> = lemmas.iter().map(|l| l.to_lowercase()).collect();
    let mut index: LemmaIndex = wanted.iter().map(|l| (l.clone(), Vec::new())).collect();
    for (ordinal, sentence) in sentences.into_iter().enumerate() {
        for tok in sentence.tokens.iter().filter(|t| t.is_verbal()) {
            if let Some(list) = index.get_mut(tok.lemma.to_lowercase().as_str()) {
                list.push(Occurrence { ordinal, sentence_id: sentence.id.clone(), token: tok.index });
            }
        }
    }
    Ok(index)
}

/// Serializes one sentence in the columnar format, followed by a blank line.
pub fn write_sentence<W: Write>(out: &mut W, sentence: &ParsedSentence) -> io::Result<()> {
    for c in &sentence.comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "# sent_id = {}", sentence.id)?;
    writeln!(out, "# text = {}", single_line(&sentence.raw_text))?;
    for t in &sentence.tokens {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            t.index, t.surface, t.lemma, t.upos, t.xpos, t.feats, t.head, t.deprel, t.deps, t.misc
        )?;
    }
    writeln!(out)
}

pub fn write_parsed_corpus<'a, I>(sentences: I, path: impl AsRef<Path>) -> io::Result<usize>
where
    I: IntoIterator<Item = &'a ParsedSentence>,
{
    let mut out = BufWriter::new(File::create(path)?);
    let mut n = 0;
    for s in sentences {
        write_sentence(&mut out, s)?;
        n += 1;
    }
    out.flush()?;
    Ok(n)
}

fn single_line(text: &str) -> String {
    text.replace("\r\n", " ").replace(['\n', '\r'], " ")
}

/// Writes one `raw_text` per line for LM training; returns the sentence count.
///
/// Embedded line breaks are replaced by a single space and logged.
pub fn write_plaintext<I, S>(sentences: I, out: &mut impl Write) -> io::Result<usize>
where
    I: IntoIterator<Item = S>,
    S: std::borrow::Borrow<ParsedSentence>,
{
    let mut n = 0;
    for s in sentences {
        let s = s.borrow();
        if s.raw_text.contains(['\n', '\r']) {
            log::warn!("sentence {}: line break in raw text replaced by a space", s.id);
            writeln!(out, "{}", single_line(&s.raw_text))?;
        } else {
            writeln!(out, "{}", s.raw_text)?;
        }
        n += 1;
    }
    Ok(n)
}

pub fn write_plaintext_file<I, S>(sentences: I, path: impl AsRef<Path>) -> io::Result<usize>
where
    I: IntoIterator<Item = S>,
    S: std::borrow::Borrow<ParsedSentence>,
{
    let mut out = BufWriter::new(File::create(path)?);
    let n = write_plaintext(sentences, &mut out)?;
    out.flush()?;
    Ok(n)
}
