#![allow(dead_code)]

use std::path::PathBuf;

use proofsmith::oracle::{GenerationMode, NliLabel};
use proofsmith::search::{Proof, Provenance, SearchConfig, SearchMethod, StepKind};
use proofsmith::text::Sentence;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn tsv(name: &str) -> Vec<Vec<String>> {
    std::fs::read_to_string(fixture(name))
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| l.split('\t').map(str::to_string).collect())
        .collect()
}

pub fn s(t: &str) -> Sentence {
    Sentence::new(t).unwrap()
}

/// Hand-checked two-step entailment chains, `id P I1 I2 H` per line.
pub fn gold_proofs() -> Vec<Proof> {
    tsv("gold_chains.tsv")
        .into_iter()
        .map(|row| {
            let mut p = Proof::new(
                s(&row[1]),
                s(&row[4]),
                NliLabel::Entailment,
                SearchMethod::Level,
                SearchConfig::default(),
            );
            p.pair_id = Some(row[0].clone());
            p.push(StepKind::Inferred, s(&row[2]), Provenance::inferred(GenerationMode::Entail, vec![0]));
            p.push(StepKind::Inferred, s(&row[3]), Provenance::inferred(GenerationMode::Entail, vec![1]));
            p
        })
        .collect()
}

/// `(id, premise, hypothesis)` rows of a 4-column pairs file.
pub fn pairs(name: &str) -> Vec<(String, Sentence, Sentence)> {
    tsv(name)
        .into_iter()
        .map(|r| (r[0].clone(), s(&r[1]), s(&r[2])))
        .collect()
}

pub fn kb_files() -> Vec<PathBuf> {
    vec![fixture("kb_omcs.txt"), fixture("kb_generics.tsv")]
}
