//! NLI data augmentation: label generations by the mode that produced them
//! and mix them into a subsample of a base pair set.
//!
//! Pair files are UTF-8 TSV without a header: `premise<TAB>hypothesis<TAB>label`,
//! label one of `entailment`, `neutral`, `contradiction`.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::{index::sample, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{generate, GenerationMode, Generator, NliLabel};
use crate::text::{normalized_key, Sentence};

/// Modes whose outputs become training pairs.
pub const AUGMENT_MODES: [GenerationMode; 4] = [
    GenerationMode::Entail,
    GenerationMode::Contradict,
    GenerationMode::Neutral,
    GenerationMode::Monotonic,
];

/// The fixed mode-to-label mapping; `None` for modes that do not yield pairs.
pub fn label_for_mode(mode: GenerationMode) -> Option<NliLabel> {
    match mode {
        GenerationMode::Entail | GenerationMode::Monotonic => Some(NliLabel::Entailment),
        GenerationMode::Contradict => Some(NliLabel::Contradiction),
        GenerationMode::Neutral => Some(NliLabel::Neutral),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentExample {
    pub premise: String,
    pub hypothesis: String,
    pub label: NliLabel,
    pub provenance_mode: GenerationMode,
    pub source_premise_id: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub premise: String,
    pub hypothesis: String,
    pub label: NliLabel,
}

fn pair_key(p: &str, h: &str) -> (String, String) {
    (normalized_key(p), normalized_key(h))
}

/// Top `per_premise` generations per premise and mode, labelled by mode and
/// deduplicated on (premise, hypothesis) with the earlier mode winning.
/// Premises whose generation fails are skipped with a warning.
pub fn generate_augment_set(
    premises: &[(String, Sentence)],
    modes: &[GenerationMode],
    per_premise: usize,
    generator: &dyn Generator,
    beam: usize,
) -> Result<Vec<AugmentExample>> {
    if per_premise == 0 {
        return Err(Error::invalid("per_premise must be at least 1"));
    }
    if let Some(m) = modes.iter().find(|m| label_for_mode(**m).is_none()) {
        return Err(Error::invalid(format!("mode {m} has no augmentation label")));
    }
    let per: Vec<Result<Vec<AugmentExample>>> = premises
        .par_iter()
        .map(|(id, premise)| {
            let mut out = Vec::new();
            for &mode in modes {
                let gens = match generate(generator, mode, &[premise], per_premise, beam.max(per_premise)) {
                    Ok(g) => g,
                    Err(e) if e.is_oracle_failure() => {
                        log::warn!("skipping premise {id}: {e}");
                        return Ok(Vec::new());
                    }
                    Err(e) => return Err(e),
                };
                out.extend(gens.into_iter().map(|h| AugmentExample {
                    premise: premise.text().to_string(),
                    hypothesis: h.text().to_string(),
                    label: label_for_mode(mode).expect("checked above"),
                    provenance_mode: mode,
                    source_premise_id: id.clone(),
                }));
            }
            Ok(out)
        })
        .collect();
    let mut seen = HashSet::new();
    let mut examples = Vec::new();
    for batch in per {
        for ex in batch? {
            if seen.insert(pair_key(&ex.premise, &ex.hypothesis)) {
                examples.push(ex);
            }
        }
    }
    Ok(examples)
}

pub fn read_pairs(path: &Path) -> Result<Vec<LabeledPair>> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fmt_err = |msg: String| Error::Format {
            path: path.to_path_buf(),
            line: i + 1,
            msg,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(fmt_err(format!("expected 3 tab-separated fields, found {}", fields.len())));
        }
        let label = fields[2].trim().parse::<NliLabel>().map_err(|e| fmt_err(e.to_string()))?;
        out.push(LabeledPair {
            premise: fields[0].to_string(),
            hypothesis: fields[1].to_string(),
            label,
        });
    }
    Ok(out)
}

pub fn write_pairs(path: &Path, pairs: &[LabeledPair]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for p in pairs {
        if [&p.premise, &p.hypothesis].iter().any(|t| t.contains(['\t', '\n', '\r'])) {
            return Err(Error::invalid(format!("pair text contains a tab or newline: {:?}", p.premise)));
        }
        writeln!(w, "{}\t{}\t{}", p.premise, p.hypothesis, p.label.name()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// How the augment budget is split across generation modes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AugmentShares {
    /// Same count per mode present in the pool; the remainder goes to the
    /// earliest modes.
    #[default]
    Equal,
    /// Uniform over the whole pool.
    Pooled,
}

impl std::str::FromStr for AugmentShares {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equal" => Ok(AugmentShares::Equal),
            "pooled" => Ok(AugmentShares::Pooled),
            _ => Err(Error::invalid(format!("unknown share policy `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExportManifest {
    pub seed: u64,
    pub base_fraction: f64,
    pub augment_fraction: f64,
    pub shares: AugmentShares,
    /// Base pairs after deduplication.
    pub base_available: usize,
    pub augment_available: usize,
    pub base_count: usize,
    pub augment_count: usize,
    pub total: usize,
    pub augment_by_mode: BTreeMap<String, usize>,
    pub labels: BTreeMap<String, usize>,
}

fn check_fraction(name: &str, f: f64) -> Result<()> {
    if (0.0..=1.0).contains(&f) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be in [0, 1], got {f}")))
    }
}

/// Seeded mix of `floor(base_fraction * |base|)` base pairs and
/// `floor(augment_fraction * |base|)` augment examples, shuffled together.
/// `|base|` counts distinct (premise, hypothesis) pairs. Augment examples
/// that duplicate a chosen base pair are not eligible.
pub fn export_dataset(
    base: &[LabeledPair],
    base_fraction: f64,
    augment: &[AugmentExample],
    augment_fraction: f64,
    shares: AugmentShares,
    seed: u64,
) -> Result<(Vec<LabeledPair>, ExportManifest)> {
    check_fraction("base_fraction", base_fraction)?;
    check_fraction("augment_fraction", augment_fraction)?;
    let mut seen = HashSet::new();
    let base: Vec<&LabeledPair> = base
        .iter()
        .filter(|p| seen.insert(pair_key(&p.premise, &p.hypothesis)))
        .collect();
    let n_base = (base_fraction * base.len() as f64).floor() as usize;
    let n_aug = (augment_fraction * base.len() as f64).floor() as usize;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut base_idx = sample(&mut rng, base.len(), n_base).into_vec();
    base_idx.sort_unstable();
    let chosen_base: Vec<LabeledPair> = base_idx.iter().map(|&i| base[i].clone()).collect();
    let taken: HashSet<_> = chosen_base.iter().map(|p| pair_key(&p.premise, &p.hypothesis)).collect();

    let mut aug_seen = HashSet::new();
    let pool: Vec<&AugmentExample> = augment
        .iter()
        .filter(|a| {
            let k = pair_key(&a.premise, &a.hypothesis);
            !taken.contains(&k) && aug_seen.insert(k)
        })
        .collect();

    let chosen_aug: Vec<&AugmentExample> = match shares {
        AugmentShares::Pooled => {
            if n_aug > pool.len() {
                return Err(Error::Shortfall(format!(
                    "need {n_aug} augment examples, only {} available (short by {})",
                    pool.len(),
                    n_aug - pool.len()
                )));
            }
            let mut idx = sample(&mut rng, pool.len(), n_aug).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| pool[i]).collect()
        }
        AugmentShares::Equal => {
            let modes: Vec<GenerationMode> = AUGMENT_MODES
                .iter()
                .copied()
                .filter(|m| pool.iter().any(|a| a.provenance_mode == *m))
                .collect();
            if modes.is_empty() {
                if n_aug > 0 {
                    return Err(Error::Shortfall(format!("need {n_aug} augment examples, none available")));
                }
                Vec::new()
            } else {
                let by_mode: Vec<Vec<&AugmentExample>> = modes
                    .iter()
                    .map(|m| pool.iter().copied().filter(|a| a.provenance_mode == *m).collect())
                    .collect();
                let quota = |i: usize| n_aug / modes.len() + usize::from(i < n_aug % modes.len());
                let short: Vec<String> = modes
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| quota(*i) > by_mode[*i].len())
                    .map(|(i, m)| format!("{m}: need {}, have {}", quota(i), by_mode[i].len()))
                    .collect();
                if !short.is_empty() {
                    return Err(Error::Shortfall(short.join("; ")));
                }
                let mut out = Vec::new();
                for (i, group) in by_mode.iter().enumerate() {
                    let mut idx = sample(&mut rng, group.len(), quota(i)).into_vec();
                    idx.sort_unstable();
                    out.extend(idx.into_iter().map(|j| group[j]));
                }
                out
            }
        }
    };

    let mut augment_by_mode = BTreeMap::new();
    for a in &chosen_aug {
        *augment_by_mode.entry(a.provenance_mode.name().to_string()).or_insert(0) += 1;
    }
    let mut rows: Vec<LabeledPair> = chosen_base;
    rows.extend(chosen_aug.iter().map(|a| LabeledPair {
        premise: a.premise.clone(),
        hypothesis: a.hypothesis.clone(),
        label: a.label,
    }));
    rows.shuffle(&mut rng);
    let mut labels = BTreeMap::new();
    for r in &rows {
        *labels.entry(r.label.name().to_string()).or_insert(0) += 1;
    }
    let manifest = ExportManifest {
        seed,
        base_fraction,
        augment_fraction,
        shares,
        base_available: base.len(),
        augment_available: pool.len(),
        base_count: n_base,
        augment_count: chosen_aug.len(),
        total: rows.len(),
        augment_by_mode,
        labels,
    };
    Ok((rows, manifest))
}
