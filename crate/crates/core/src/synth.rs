//! Builders for small, correctly parsed sentences.
//!
//! Useful for fixtures and desk-scale experiments where the parse is known by
//! construction: each builder emits the dependency edges a parser would
//! produce for the template, so the gold voice label of the verb is fixed.

use crate::corpus::{ParsedSentence, Token};

/// Inflected forms of one verb.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verb {
    pub lemma: String,
    pub past: String,
    pub participle: String,
}

impl Verb {
    pub fn new(lemma: &str, past: &str, participle: &str) -> Self {
        Verb { lemma: lemma.into(), past: past.into(), participle: participle.into() }
    }

    /// Regular verb: `walk` → `walked`, `drop` → `dropped` given the past form.
    pub fn regular(lemma: &str, past: &str) -> Self {
        Verb::new(lemma, past, past)
    }
}

/// Determiner + noun.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Np<'a>(pub &'a str, pub &'a str);

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

struct Draft {
    tokens: Vec<Token>,
}

impl Draft {
    fn new() -> Self {
        Draft { tokens: Vec::new() }
    }

    fn push(&mut self, surface: &str, lemma: &str, upos: &str, head: u32, deprel: &str) -> u32 {
        let index = self.tokens.len() as u32 + 1;
        self.tokens.push(Token::new(index, surface, lemma, upos, head, deprel));
        index
    }

    fn finish(mut self, id: &str) -> ParsedSentence {
        if let Some(first) = self.tokens.first_mut() {
            first.surface = capitalize(&first.surface);
        }
        let n = self.tokens.len();
        if n >= 2 {
            self.tokens[n - 2].misc = "SpaceAfter=No".into();
        }
        let text = ParsedSentence::detokenize(&self.tokens);
        ParsedSentence::new(id, self.tokens, text).expect("builder emits a valid tree")
    }
}

/// `Det Noun Verb-ed Det Noun .` with a `dobj` edge.
pub fn active(id: &str, subject: Np, verb: &Verb, object: Np) -> ParsedSentence {
    let mut d = Draft::new();
    d.push(subject.0, &subject.0.to_lowercase(), "DET", 2, "det");
    d.push(subject.1, subject.1, "NOUN", 3, "nsubj");
    d.push(&verb.past, &verb.lemma, "VERB", 0, "ROOT");
    d.push(object.0, &object.0.to_lowercase(), "DET", 5, "det");
    d.push(object.1, object.1, "NOUN", 3, "dobj");
    d.push(".", ".", "PUNCT", 3, "punct");
    d.finish(id)
}

/// `Det Noun was Verb-en by Det Noun .` with `nsubjpass` and `auxpass` edges.
pub fn passive(id: &str, patient: Np, verb: &Verb, agent: Np) -> ParsedSentence {
    let mut d = Draft::new();
    d.push(patient.0, &patient.0.to_lowercase(), "DET", 2, "det");
    d.push(patient.1, patient.1, "NOUN", 4, "nsubjpass");
    d.push("was", "be", "AUX", 4, "auxpass");
    d.push(&verb.participle, &verb.lemma, "VERB", 0, "ROOT");
    d.push("by", "by", "ADP", 4, "agent");
    d.push(agent.0, &agent.0.to_lowercase(), "DET", 7, "det");
    d.push(agent.1, agent.1, "NOUN", 5, "pobj");
    d.push(".", ".", "PUNCT", 4, "punct");
    d.finish(id)
}

/// `Det Noun Verb-ed Prep Det Noun .` with no object: labelled OTHER.
pub fn intransitive(id: &str, subject: Np, verb: &Verb, prep: &str, object: Np) -> ParsedSentence {
    let mut d = Draft::new();
    d.push(subject.0, &subject.0.to_lowercase(), "DET", 2, "det");
    d.push(subject.1, subject.1, "NOUN", 3, "nsubj");
    d.push(&verb.past, &verb.lemma, "VERB", 0, "ROOT");
    d.push(prep, prep, "ADP", 3, "prep");
    d.push(object.0, &object.0.to_lowercase(), "DET", 6, "det");
    d.push(object.1, object.1, "NOUN", 4, "pobj");
    d.push(".", ".", "PUNCT", 3, "punct");
    d.finish(id)
}

/// `Det Noun is Adj .`: a sentence with no lexical verb.
pub fn copular(id: &str, subject: Np, adjective: &str) -> ParsedSentence {
    let mut d = Draft::new();
    d.push(subject.0, &subject.0.to_lowercase(), "DET", 2, "det");
    d.push(subject.1, subject.1, "NOUN", 4, "nsubj");
    d.push("is", "be", "AUX", 4, "cop");
    d.push(adjective, adjective, "ADJ", 0, "ROOT");
    d.push(".", ".", "PUNCT", 4, "punct");
    d.finish(id)
}
