mod common;

use std::collections::BTreeSet;

use passlab::corpus::{write_parsed_corpus, Corpus, ParsedSentence};
use passlab::intervention::{
    apply_frequency_intervention, apply_intervention_to_file, apply_swap_intervention, FrequencyInterventionSpec, InterventionError,
    InterventionSpec, SwapInterventionSpec,
};
use passlab::synth::{active, intransitive, passive, Np};
use passlab::voice::{count_voices, VoiceLabel};
use proptest::prelude::*;

fn freq_spec(seed: u64) -> FrequencyInterventionSpec {
    FrequencyInterventionSpec {
        mutating: "drop".into(),
        target: "last".into(),
        seed,
        watch: common::WATCH.iter().map(|w| w.to_string()).collect(),
    }
}

#[test]
fn frequency_on_large_corpus() {
    let corpus = common::frequency_corpus(1);
    assert_eq!(corpus.len(), 5000);
    let before = count_voices(&corpus, "drop").counts;
    assert_eq!((before.active, before.passive), (600, 200));
    let (out, report) = apply_frequency_intervention(&corpus, &freq_spec(7)).unwrap();
    let after = count_voices(&out, "drop").counts;
    assert_eq!(after.passive, 3);
    let removed: BTreeSet<&str> = report.removed_ids.iter().map(String::as_str).collect();
    let removed_active = count_voices(corpus.iter().filter(|s| removed.contains(s.id.as_str())), "drop").counts.active;
    assert_eq!(after.active, before.active - removed_active);
    for w in common::WATCH {
        assert_eq!(count_voices(&out, w).counts, count_voices(&corpus, w).counts, "{w}");
        assert_eq!(report.deltas()[w], (0, 0, 0));
    }
}

#[test]
fn file_path_matches_in_memory_and_is_byte_stable() {
    let corpus = common::frequency_corpus(2);
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.conllu");
    write_parsed_corpus(&corpus, &input).unwrap();
    let spec = InterventionSpec::Frequency(freq_spec(3));
    let (a, b) = (dir.path().join("a.conllu"), dir.path().join("b.conllu"));
    let ra = apply_intervention_to_file(&input, &a, &spec).unwrap();
    let rb = apply_intervention_to_file(&input, &b, &spec).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ra, rb);
    let (mem, _) = apply_frequency_intervention(&corpus, &freq_spec(3)).unwrap();
    assert_eq!(Corpus::load(&a).unwrap().sentences(), mem.as_slice());
}

#[test]
fn failed_planning_writes_nothing() {
    let corpus = common::swap_corpus();
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.conllu");
    write_parsed_corpus(&corpus, &input).unwrap();
    let mut inflections = common::drop_to_last_inflections();
    inflections.remove("dropped");
    let spec = InterventionSpec::Swap(SwapInterventionSpec {
        mutating: "last".into(),
        target: "drop".into(),
        fraction: 0.3,
        inflections,
        seed: 1,
        watch: vec![],
    });
    let out = dir.path().join("out.conllu");
    assert!(matches!(apply_intervention_to_file(&input, &out, &spec), Err(InterventionError::MissingInflections(_))));
    assert!(!out.exists());
}

#[test]
fn worked_swap_examples() {
    let gold = Corpus::load(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/voice_gold.conllu")).unwrap();
    let picked: Vec<ParsedSentence> = gold.sentences().iter().filter(|s| s.id == "g05" || s.id == "g18").cloned().collect();
    let spec = SwapInterventionSpec {
        mutating: "last".into(),
        target: "drop".into(),
        fraction: 1.0,
        inflections: common::drop_to_last_inflections(),
        seed: 0,
        watch: vec![],
    };
    let (out, report) = apply_swap_intervention(&picked, &spec).unwrap();
    assert_eq!(report.altered, 2);
    assert_eq!(out[0].raw_text, "The BBC's Geeta Pandey recently lasted in to meet him.");
    assert_eq!(out[1].raw_text, "The ball will last toward the ground.");
    assert_eq!(out[1].tokens[3].lemma, "last");
}

fn mixed_corpus(spec: &[(u8, u8)]) -> Vec<ParsedSentence> {
    let drop = common::verb("drop");
    let last = common::verb("last");
    let push = common::verb("push");
    spec.iter()
        .enumerate()
        .map(|(i, (kind, n))| {
            let o = Np("the", common::OBJECTS[*n as usize % 5]);
            let s = Np("a", common::SUBJECTS[*n as usize % 5]);
            let id = format!("s{i}");
            match kind % 7 {
                0 => passive(&id, o, &drop, s),
                1 => active(&id, s, &drop, o),
                2 => intransitive(&id, o, &drop, "near", s),
                3 => passive(&id, o, &last, s),
                4 => active(&id, s, &last, o),
                5 => passive(&id, o, &push, s),
                _ => {
                    let a = active("x", s, &push, o);
                    let b = passive("x", o, &drop, s);
                    common::conjoin(&id, &a, &b)
                }
            }
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn frequency_invariants(spec in prop::collection::vec((any::<u8>(), any::<u8>()), 1..120), seed in any::<u64>()) {
        let corpus = mixed_corpus(&spec);
        let fs = FrequencyInterventionSpec { mutating: "drop".into(), target: "last".into(), seed, watch: vec!["push".into()] };
        match apply_frequency_intervention(&corpus, &fs) {
            Ok((out, report)) => {
                let target = count_voices(&corpus, "last").counts.passive;
                prop_assert_eq!(count_voices(&out, "drop").counts.passive, target);
                prop_assert_eq!(count_voices(&out, "last").counts, count_voices(&corpus, "last").counts);
                prop_assert_eq!(out.len() + report.removed, corpus.len());
                // every removed sentence held a passive use of the mutating verb
                let removed: BTreeSet<&str> = report.removed_ids.iter().map(String::as_str).collect();
                for s in corpus.iter().filter(|s| removed.contains(s.id.as_str())) {
                    prop_assert!(count_voices([s], "drop").counts.passive > 0);
                }
                // survivors are untouched and in order
                let kept: Vec<&ParsedSentence> = corpus.iter().filter(|s| !removed.contains(s.id.as_str())).collect();
                prop_assert!(kept.iter().zip(&out).all(|(a, b)| *a == b));
                prop_assert_eq!(report.after["push"], count_voices(&out, "push").counts);
            }
            Err(InterventionError::LemmaAbsent(_)) | Err(InterventionError::NotEnoughPassives { .. }) => {}
            Err(e) => prop_assert!(false, "unexpected {}", e),
        }
    }

    #[test]
    fn swap_invariants(spec in prop::collection::vec((any::<u8>(), any::<u8>()), 1..120), seed in any::<u64>(), fraction in 0.01f64..=1.0) {
        let corpus = mixed_corpus(&spec);
        let ss = SwapInterventionSpec {
            mutating: "last".into(),
            target: "drop".into(),
            fraction,
            inflections: common::drop_to_last_inflections(),
            seed,
            watch: vec![],
        };
        let (out, report) = apply_swap_intervention(&corpus, &ss).unwrap();
        prop_assert_eq!(out.len(), corpus.len());
        prop_assert_eq!(report.altered, (fraction * report.pool as f64 + 1e-9).floor() as usize);
        prop_assert_eq!(count_voices(&out, "last").counts.passive, count_voices(&corpus, "last").counts.passive);
        prop_assert_eq!(count_voices(&out, "drop").counts.passive, count_voices(&corpus, "drop").counts.passive);
        let altered: BTreeSet<&str> = report.altered_ids.iter().map(String::as_str).collect();
        for (a, b) in corpus.iter().zip(&out) {
            if altered.contains(a.id.as_str()) {
                prop_assert!(b.tokens.iter().any(|t| t.lemma == "last"));
                prop_assert!(count_voices([b], "drop").occurrences.iter().all(|o| o.label == VoiceLabel::Passive));
                prop_assert_eq!(a.tokens.len(), b.tokens.len());
            } else {
                prop_assert_eq!(a, b);
            }
        }
    }
}
