//! Tools for studying how exposure shapes which verbs passivize.
//!
//! The pipeline runs from dependency-parsed text to analysis tables:
//!
//! * [`corpus`] reads and writes CoNLL-U, streaming or indexed;
//! * [`voice`] labels each verb occurrence PASSIVE, ACTIVE or OTHER;
//! * [`intervention`] rewrites a corpus counterfactually (frequency matching
//!   or verb transplantation) under a seeded generator;
//! * [`stimuli`] generates active/passive minimal pairs and counterbalanced
//!   presentation lists;
//! * [`scoring`] turns sentences into summed log-probabilities, in process or
//!   through an external scorer;
//! * [`analysis`] computes passive drops, exclusions, correlations, bootstrap
//!   intervals and split-half reliability.
//!
//! Numeric code is generic over [`scalar::Real`]; the aliases below fix the
//! usual `f64` instantiations.

pub mod analysis;
pub mod corpus;
pub mod intervention;
pub mod rng;
pub mod scalar;
pub mod scoring;
pub mod stimuli;
pub mod synth;
pub mod voice;

pub use corpus::{Corpus, CorpusReader, ParsedSentence, Token};
pub use intervention::{InterventionReport, InterventionSpec};
pub use scalar::Real;
pub use scoring::{ExternalScorer, ScoreRecord, Scorer};
pub use stimuli::{SentencePair, Voice};
pub use voice::{VoiceCounts, VoiceLabel};

/// Kneser-Ney model with `f64` tables.
pub type KneserNey = scoring::NGramModel<f64>;
/// Kneser-Ney model with `f32` tables, for large training sets.
pub type KneserNey32 = scoring::NGramModel<f32>;
pub type DropRecord = analysis::PassiveDropRecord<f64>;
pub type Observation = analysis::PairObservation<f64>;
pub type GroupDrop = analysis::GroupDrop<f64>;
pub type BootstrapCi = analysis::BootstrapCi<f64>;
pub type SplitHalf = analysis::SplitHalf<f64>;
pub type Pearson = analysis::Pearson<f64>;
