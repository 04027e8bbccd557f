//! Run configuration: TOML file overlaid by command-line flags, and the run
//! manifest written next to every output.
//!
//! A manifest is itself a valid config file, so `--config out/manifest.toml`
//! replays a run.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use passlab::intervention::SpecFile;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::usage;

pub const MANIFEST: &str = "manifest.toml";

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classify: Option<ClassifyArgs>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervene: Option<InterveneArgs>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluate: Option<EvaluateArgs>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lists: Option<ListsArgs>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judgments: Option<JudgmentsArgs>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<ReportArgs>,
    /// SHA-256 of every input file, by path (manifests only).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub inputs: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| usage(format!("invalid config {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyArgs {
    /// Dependency-parsed corpus (CoNLL-U).
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// Lemmas to count, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lemmas: Vec<String>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterveneArgs {
    /// Dependency-parsed corpus (CoNLL-U).
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// Intervention spec file (TOML).
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<PathBuf>,
    /// Also write the output as plain text, one sentence per line.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plaintext: Option<bool>,
    /// Spec embedded by a manifest.
    #[arg(skip)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inline_spec: Option<SpecFile>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    Builtin,
    External,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateArgs {
    /// Minimal-pair suite (JSONL); defaults to the shipped stimuli.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<PathBuf>,
    /// Training text for the built-in scorer (plain text or CoNLL-U).
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scorer: Option<ScorerKind>,
    /// Command line of an external scorer.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scorer_cmd: Option<String>,
    /// N-gram order of the built-in scorer [default: 3].
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    /// Kneser-Ney discount of the built-in scorer [default: 0.75].
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discount: Option<f64>,
    /// Optional good/bad sentence pairs (JSONL) for an accuracy check.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blimp: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ListsArgs {
    /// Verb classes and frames (TOML); defaults to the shipped materials.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<PathBuf>,
    /// Filler sentences (TSV); defaults to the shipped fillers.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fillers: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JudgmentsArgs {
    /// Judgment CSV with participant_id, item_id, score.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// Suite the items come from (JSONL); defaults to the shipped stimuli.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<PathBuf>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fillers: Option<PathBuf>,
    /// Bootstrap iterations [default: 1000].
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    /// Confidence level [default: 0.95].
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    /// Random participant splits for reliability [default: 10].
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub splits: Option<usize>,
    /// Exclude participants failing any attention check.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attention_hard: Option<bool>,
    /// Treat any rejected row as a validation error.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strict: Option<bool>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportArgs {
    /// Baseline `evaluate` output directory or drops.csv.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<PathBuf>,
    /// Intervened `evaluate` output directory or drops.csv.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervened: Option<PathBuf>,
    /// Mutating verbs, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mutating: Vec<String>,
    /// Human drops (`judgments` output dir or drops.csv) to correlate with the intervened model.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub human: Option<PathBuf>,
}

/// Overlays `flags` on `config`: every field set on the command line wins.
pub fn overlay<T: Serialize + DeserializeOwned + Default>(config: Option<T>, flags: T) -> Result<T> {
    let to_table = |v: &T| -> Result<toml::Table> {
        match toml::Value::try_from(v)? {
            toml::Value::Table(t) => Ok(t),
            _ => anyhow::bail!("config section is not a table"),
        }
    };
    let mut base = to_table(&config.unwrap_or_default())?;
    for (k, v) in to_table(&flags)? {
        if matches!(&v, toml::Value::Array(a) if a.is_empty()) {
            continue;
        }
        base.insert(k, v);
    }
    Ok(toml::Value::Table(base).try_into()?)
}

/// Absolute form of a path that must exist; exit code 2 otherwise.
pub fn existing(path: &Path, what: &str) -> Result<PathBuf> {
    if !path.exists() {
        return Err(usage(format!("{what} {} does not exist", path.display())));
    }
    path.canonicalize().with_context(|| format!("resolving {}", path.display()))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

pub fn write_manifest(dir: &Path, mut config: RunConfig, inputs: &[&Path]) -> Result<()> {
    config.version = Some(env!("CARGO_PKG_VERSION").to_string());
    config.rng = Some(passlab::rng::RNG_ALGORITHM.to_string());
    for p in inputs {
        config.inputs.insert(p.display().to_string(), sha256_file(p)?);
    }
    let text = toml::to_string(&config).context("serializing manifest")?;
    fs::write(dir.join(MANIFEST), text).context("writing manifest")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_config() {
        let config = EvaluateArgs { order: Some(4), discount: Some(0.5), ..Default::default() };
        let flags = EvaluateArgs { order: Some(2), ..Default::default() };
        let merged = overlay(Some(config), flags).unwrap();
        assert_eq!(merged.order, Some(2));
        assert_eq!(merged.discount, Some(0.5));
        let lists = overlay(Some(ClassifyArgs { input: None, lemmas: vec!["drop".into()] }), ClassifyArgs::default()).unwrap();
        assert_eq!(lists.lemmas, ["drop"]);
    }

    #[test]
    fn manifest_with_inline_spec_round_trips() {
        let spec = SpecFile::parse("kind = \"frequency\"\nmutating = \"drop\"\ntarget = \"last\"\nseed = 3\n").unwrap();
        let cfg = RunConfig {
            command: Some("intervene".into()),
            seed: Some(3),
            intervene: Some(InterveneArgs { input: Some("/x.conllu".into()), inline_spec: Some(spec.clone()), ..Default::default() }),
            ..Default::default()
        };
        let text = toml::to_string(&cfg).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back.intervene.unwrap().inline_spec, Some(spec));
    }
}
