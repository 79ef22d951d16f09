//! Automated proof verification: per-pair entailment correctness, BLEU-4 and
//! Jaccard minimality, step and keyword counts, the negated/perturbed gold
//! baselines, and aggregate reports.

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{generate, judge_many, GenerationMode, Generator, Judge, Lexicon, NliLabel};
use crate::search::{Proof, StepKind};
use crate::text::{bleu4, count_keywords, jaccard, Sentence, Tagger};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMode {
    /// Fact steps are left out of the pair chain.
    #[default]
    Plain,
    /// Facts are appended to the left side of the pair that consumes them.
    FactConcat,
}

impl std::str::FromStr for ScoreMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(ScoreMode::Plain),
            "fact_concat" => Ok(ScoreMode::FactConcat),
            _ => Err(Error::invalid(format!("unknown score mode `{s}`"))),
        }
    }
}

/// The pair chain `(P, I1), (I1, I2), ..., (In, H)`. A proof with no
/// inferred step degenerates to `[(P, H)]` and a warning.
pub fn consecutive_pairs(proof: &Proof, mode: ScoreMode) -> Result<(Vec<(Sentence, Sentence)>, Vec<String>)> {
    let mut pairs = Vec::new();
    let mut warnings = Vec::new();
    let mut left = proof.premise.clone();
    let mut pending: Vec<&Sentence> = Vec::new();
    let with_facts = |left: &Sentence, pending: &[&Sentence]| -> Result<Sentence> {
        if mode == ScoreMode::Plain || pending.is_empty() {
            return Ok(left.clone());
        }
        let mut text = left.text().trim_end_matches('.').to_string();
        for f in pending {
            text.push_str(". ");
            text.push_str(f.text().trim_end_matches('.'));
        }
        Sentence::new(text)
    };
    for step in &proof.steps {
        match step.kind {
            StepKind::Fact => pending.push(&step.text),
            StepKind::Inferred => {
                pairs.push((with_facts(&left, &pending)?, step.text.clone()));
                pending.clear();
                left = step.text.clone();
            }
        }
    }
    if pairs.is_empty() {
        warnings.push("proof has no inferred step; scoring (P, H) only".to_string());
    }
    pairs.push((with_facts(&left, &pending)?, proof.hypothesis.clone()));
    Ok((pairs, warnings))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProofMetrics {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_id: Option<String>,
    pub mode: ScoreMode,
    /// Judgment of the bare (P, H) pair.
    pub ph_label: Option<NliLabel>,
    pub ph_bleu4: f64,
    pub ph_jaccard: f64,
    /// One entry per consecutive pair; `None` where the judge failed.
    pub pair_labels: Vec<Option<NliLabel>>,
    pub pair_p_entail: Vec<Option<f64>>,
    pub pair_bleu4: Vec<f64>,
    pub pair_jaccard: Vec<f64>,
    pub num_steps: usize,
    pub keywords_premise: usize,
    pub keywords_intermediate_mean: Option<f64>,
    pub keywords_hypothesis: usize,
    #[serde(default)]
    pub warnings: Vec<String>,
    #[serde(default)]
    pub errors: Vec<String>,
}

impl ProofMetrics {
    /// Entailed fraction of the judged consecutive pairs.
    pub fn correctness(&self) -> Option<f64> {
        let judged: Vec<_> = self.pair_labels.iter().flatten().collect();
        if judged.is_empty() {
            return None;
        }
        Some(judged.iter().filter(|l| ***l == NliLabel::Entailment).count() as f64 / judged.len() as f64)
    }

    pub fn mean_jaccard(&self) -> f64 {
        self.pair_jaccard.iter().sum::<f64>() / self.pair_jaccard.len() as f64
    }

    /// Pairs whose two sides tokenize to the same set.
    pub fn non_minimal_pairs(&self) -> Vec<usize> {
        (0..self.pair_jaccard.len()).filter(|&i| self.pair_jaccard[i] >= 1.0).collect()
    }
}

/// Scores one proof. Oracle failures do not abort: the affected labels or
/// counts are left empty and the failure is listed in `errors`.
pub fn score_proof(proof: &Proof, judge: &dyn Judge, tagger: &dyn Tagger, mode: ScoreMode) -> Result<ProofMetrics> {
    let (pairs, warnings) = consecutive_pairs(proof, mode)?;
    let mut errors = Vec::new();

    let mut to_judge: Vec<(&Sentence, &Sentence)> = vec![(&proof.premise, &proof.hypothesis)];
    to_judge.extend(pairs.iter().map(|(a, b)| (a, b)));
    let (ph_label, pair_labels, pair_p_entail) = match judge_many(judge, &to_judge) {
        Ok(js) => (
            Some(js[0].label),
            js[1..].iter().map(|j| Some(j.label)).collect(),
            js[1..].iter().map(|j| Some(j.p_entail)).collect(),
        ),
        Err(e) if e.is_oracle_failure() => {
            errors.push(format!("judge: {e}"));
            (None, vec![None; pairs.len()], vec![None; pairs.len()])
        }
        Err(e) => return Err(e),
    };

    let mut pair_bleu4 = Vec::with_capacity(pairs.len());
    let mut pair_jaccard = Vec::with_capacity(pairs.len());
    for (a, b) in &pairs {
        pair_bleu4.push(bleu4(b.tokens(), a.tokens())?);
        pair_jaccard.push(jaccard(a.tokens(), b.tokens())?);
    }

    let mut count = |s: &Sentence| match count_keywords(s, tagger) {
        Ok(c) => Some(c),
        Err(e) => {
            errors.push(format!("tagger: {e}"));
            None
        }
    };
    let keywords_premise = count(&proof.premise).unwrap_or(0);
    let keywords_hypothesis = count(&proof.hypothesis).unwrap_or(0);
    let inter: Vec<usize> = proof.inferred_steps().filter_map(|s| count(&s.text)).collect();
    let keywords_intermediate_mean =
        (!inter.is_empty()).then(|| inter.iter().sum::<usize>() as f64 / inter.len() as f64);

    Ok(ProofMetrics {
        pair_id: proof.pair_id.clone(),
        mode,
        ph_label,
        ph_bleu4: bleu4(proof.hypothesis.tokens(), proof.premise.tokens())?,
        ph_jaccard: jaccard(proof.premise.tokens(), proof.hypothesis.tokens())?,
        pair_labels,
        pair_p_entail,
        pair_bleu4,
        pair_jaccard,
        num_steps: proof.num_inferred(),
        keywords_premise,
        keywords_intermediate_mean,
        keywords_hypothesis,
        warnings,
        errors,
    })
}

/// Replaces every inferred step with the top contradiction generation.
pub fn negate_gold(proof: &Proof, generator: &dyn Generator, beam: usize) -> Result<Proof> {
    let mut out = proof.clone();
    if proof.num_inferred() == 0 {
        out.warnings.push("no inferred steps to negate".into());
        return Ok(out);
    }
    for step in out.steps.iter_mut().filter(|s| s.kind == StepKind::Inferred) {
        match generate(generator, GenerationMode::Contradict, &[&step.text], 1, beam) {
            Ok(mut c) if !c.is_empty() => {
                step.text = c.remove(0);
                step.provenance.transform = Some("negated".into());
            }
            Ok(_) => out.warnings.push(format!("step {} has no contradiction; left unchanged", step.j)),
            Err(e) if e.is_oracle_failure() => {
                out.warnings.push(format!("step {}: {e}; left unchanged", step.j))
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Picks a replacement for `tokens[position]`; must differ from it.
pub trait Substituter {
    fn substitute(&self, tokens: &[String], position: usize, rng: &mut ChaCha8Rng) -> String;
}

/// Uniform random swap from a fixed word list.
#[derive(Clone, Debug)]
pub struct LexiconSubstituter {
    vocabulary: Vec<String>,
}

impl LexiconSubstituter {
    pub fn new(vocabulary: Vec<String>) -> Result<Self> {
        if vocabulary.len() < 2 {
            return Err(Error::invalid("substitution vocabulary needs at least two words"));
        }
        Ok(LexiconSubstituter { vocabulary })
    }

    pub fn from_lexicon(lex: &Lexicon) -> Result<Self> {
        Self::new(lex.vocabulary())
    }
}

impl Substituter for LexiconSubstituter {
    fn substitute(&self, tokens: &[String], position: usize, rng: &mut ChaCha8Rng) -> String {
        let original = &tokens[position];
        loop {
            let w = &self.vocabulary[rng.gen_range(0..self.vocabulary.len())];
            if w != original {
                return w.clone();
            }
        }
    }
}

/// Number of positions perturbed in a `w`-token step at `ratio`.
pub fn perturb_count(ratio: f64, w: usize) -> usize {
    // The epsilon keeps 0.5 * 6 from rounding up to 4 through float noise.
    ((ratio * w as f64 - 1e-9).ceil().max(0.0) as usize).min(w)
}

/// Replaces exactly `ceil(ratio * w)` token positions of every inferred
/// step, chosen without replacement by a ChaCha8 stream seeded with `seed`.
pub fn perturb_gold(proof: &Proof, ratio: f64, substituter: &dyn Substituter, seed: u64) -> Result<Proof> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::invalid(format!("ratio must be in (0, 1], got {ratio}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = proof.clone();
    for step in out.steps.iter_mut().filter(|s| s.kind == StepKind::Inferred) {
        let mut tokens = step.text.tokens().to_vec();
        let k = perturb_count(ratio, tokens.len());
        let mut positions = sample(&mut rng, tokens.len(), k).into_vec();
        positions.sort_unstable();
        for p in positions {
            tokens[p] = substituter.substitute(step.text.tokens(), p, &mut rng);
        }
        step.text = Sentence::new(tokens.join(" "))?;
        step.provenance.transform = Some("perturbed".into());
        step.provenance.seed = Some(seed);
    }
    Ok(out)
}

/// Correctness and minimality for one pair group.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub pairs: usize,
    /// Entailed share of judged pairs, in percent.
    pub correctness: Option<f64>,
    pub bleu4: Option<f64>,
    /// Mean Jaccard, in percent.
    pub jaccard: Option<f64>,
}

#[derive(Default)]
struct GroupAcc {
    judged: usize,
    entailed: usize,
    bleu: Vec<f64>,
    js: Vec<f64>,
}

impl GroupAcc {
    fn add(&mut self, label: Option<NliLabel>, b4: f64, js: f64) {
        if let Some(l) = label {
            self.judged += 1;
            self.entailed += (l == NliLabel::Entailment) as usize;
        }
        self.bleu.push(b4);
        self.js.push(js);
    }

    fn finish(&self) -> GroupStats {
        GroupStats {
            pairs: self.bleu.len(),
            correctness: (self.judged > 0).then(|| 100.0 * self.entailed as f64 / self.judged as f64),
            bleu4: mean(&self.bleu),
            jaccard: mean(&self.js).map(|m| 100.0 * m),
        }
    }
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Population means in the layout of the standard proof-evaluation table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub population: usize,
    pub p_h: GroupStats,
    pub p_i1: GroupStats,
    /// Pooled interior pairs `(I_j, I_j+1)`; proofs with fewer than two
    /// inferred steps contribute nothing here.
    pub i1_in: GroupStats,
    pub in_h: GroupStats,
    pub mean_steps: f64,
    pub keywords_p: f64,
    /// Mean over proofs of each proof's mean intermediate keyword count.
    pub keywords_intermediate: Option<f64>,
    pub keywords_h: f64,
}

pub fn aggregate(metrics: &[ProofMetrics]) -> Result<AggregateReport> {
    if metrics.is_empty() {
        return Err(Error::invalid("nothing to aggregate"));
    }
    let (mut ph, mut first, mut interior, mut last) =
        (GroupAcc::default(), GroupAcc::default(), GroupAcc::default(), GroupAcc::default());
    for m in metrics {
        ph.add(m.ph_label, m.ph_bleu4, m.ph_jaccard);
        if m.num_steps == 0 {
            continue;
        }
        let n = m.pair_labels.len();
        let at = |i: usize| (m.pair_labels[i], m.pair_bleu4[i], m.pair_jaccard[i]);
        let (l, b, j) = at(0);
        first.add(l, b, j);
        for i in 1..n - 1 {
            let (l, b, j) = at(i);
            interior.add(l, b, j);
        }
        let (l, b, j) = at(n - 1);
        last.add(l, b, j);
    }
    let pop = metrics.len() as f64;
    let inter: Vec<f64> = metrics.iter().filter_map(|m| m.keywords_intermediate_mean).collect();
    Ok(AggregateReport {
        population: metrics.len(),
        p_h: ph.finish(),
        p_i1: first.finish(),
        i1_in: interior.finish(),
        in_h: last.finish(),
        mean_steps: metrics.iter().map(|m| m.num_steps as f64).sum::<f64>() / pop,
        keywords_p: metrics.iter().map(|m| m.keywords_premise as f64).sum::<f64>() / pop,
        keywords_intermediate: mean(&inter),
        keywords_h: metrics.iter().map(|m| m.keywords_hypothesis as f64).sum::<f64>() / pop,
    })
}

/// Column headers of [`render_table`], in order.
pub const TABLE_COLUMNS: [&str; 17] = [
    "Algorithm",
    "C:P-H",
    "C:P-I1",
    "C:I1-In",
    "C:In-H",
    "P-H:B4",
    "P-H:JS",
    "P-I1:B4",
    "P-I1:JS",
    "I1-In:B4",
    "I1-In:JS",
    "In-H:B4",
    "In-H:JS",
    "#Steps",
    "#KW:P",
    "#KW:I1-In",
    "#KW:H",
];

fn cell(v: Option<f64>, places: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.places$}"))
}

/// The cells of one table row.
pub fn table_row(name: &str, r: &AggregateReport) -> Vec<String> {
    let mut row = vec![name.to_string()];
    for g in [&r.p_h, &r.p_i1, &r.i1_in, &r.in_h] {
        row.push(cell(g.correctness, 2));
    }
    for g in [&r.p_h, &r.p_i1, &r.i1_in, &r.in_h] {
        row.push(cell(g.bleu4, 4));
        row.push(cell(g.jaccard, 2));
    }
    row.push(cell(Some(r.mean_steps), 2));
    row.push(cell(Some(r.keywords_p), 2));
    row.push(cell(r.keywords_intermediate, 2));
    row.push(cell(Some(r.keywords_h), 2));
    row
}

/// Aligned plain-text table, one row per named report. Correctness and JS
/// are percentages; B4 is in [0, 1].
pub fn render_table(rows: &[(String, AggregateReport)]) -> String {
    let mut cells: Vec<Vec<String>> = vec![TABLE_COLUMNS.iter().map(|s| s.to_string()).collect()];
    cells.extend(rows.iter().map(|(name, r)| table_row(name, r)));
    let widths: Vec<usize> = (0..TABLE_COLUMNS.len())
        .map(|c| cells.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in cells.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (v, w))| if c == 0 { format!("{v:<w$}") } else { format!("{v:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
        if i == 0 {
            let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
            let _ = writeln!(out, "{}", "-".repeat(total));
        }
    }
    out
}
