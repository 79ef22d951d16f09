//! Uniform access to the neural capabilities the search needs: next-step
//! generation, sentence embedding, pairwise entailment judgment and
//! two-sentence composition.
//!
//! Backends implement the small [`Generator`], [`Embedder`] and [`Judge`]
//! traits. The free functions in this module ([`generate`], [`embed`],
//! [`judge`], [`compose`]) sit in front of any backend and enforce the
//! contracts callers rely on: arity checks, duplicate-free candidate lists,
//! unit-norm vectors and well-formed probability triples.

mod lexicon;
mod mock;
mod remote;
pub mod wire;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{l2_norm, Sentence};

pub use lexicon::Lexicon;
pub use mock::{MockOracle, MOCK_EMBED_DIM};
pub use remote::{RemoteOracle, ORACLE_URL_ENV};

/// Default decoding beam width and number of returned candidates.
pub const DEFAULT_BEAM: usize = 10;

/// Token separating the two inputs of a two-input generation mode.
pub const SEPARATOR: &str = "<sep>";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenerationMode {
    Entail,
    Contradict,
    Neutral,
    Monotonic,
    Conclude,
    Explain,
    Proof,
}

impl GenerationMode {
    pub const ALL: [GenerationMode; 7] = [
        GenerationMode::Entail,
        GenerationMode::Contradict,
        GenerationMode::Neutral,
        GenerationMode::Monotonic,
        GenerationMode::Conclude,
        GenerationMode::Explain,
        GenerationMode::Proof,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GenerationMode::Entail => "entail",
            GenerationMode::Contradict => "contradict",
            GenerationMode::Neutral => "neutral",
            GenerationMode::Monotonic => "monotonic",
            GenerationMode::Conclude => "conclude",
            GenerationMode::Explain => "explain",
            GenerationMode::Proof => "proof",
        }
    }

    /// Input prefix the sequence-to-sequence model was trained with.
    pub fn prefix(self) -> &'static str {
        match self {
            GenerationMode::Entail => "entail: ",
            GenerationMode::Contradict => "contradict: ",
            GenerationMode::Neutral => "neutral: ",
            GenerationMode::Monotonic => "monotonic: ",
            GenerationMode::Conclude => "conclude: ",
            GenerationMode::Explain => "explain: ",
            GenerationMode::Proof => "proof: ",
        }
    }

    pub fn from_prefix(prefix: &str) -> Option<GenerationMode> {
        Self::ALL.into_iter().find(|m| m.prefix() == prefix)
    }

    /// Number of input sentences the mode takes.
    pub fn arity(self) -> usize {
        match self {
            GenerationMode::Conclude | GenerationMode::Explain | GenerationMode::Proof => 2,
            _ => 1,
        }
    }

    /// Model input string, e.g. `conclude: S1 <sep> S2`.
    pub fn render_input(self, inputs: &[&str]) -> String {
        format!("{}{}", self.prefix(), inputs.join(&format!(" {SEPARATOR} ")))
    }
}

impl fmt::Display for GenerationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GenerationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown generation mode `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NliLabel {
    Entailment,
    Neutral,
    Contradiction,
}

impl NliLabel {
    pub fn name(self) -> &'static str {
        match self {
            NliLabel::Entailment => "entailment",
            NliLabel::Neutral => "neutral",
            NliLabel::Contradiction => "contradiction",
        }
    }
}

impl fmt::Display for NliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NliLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "entailment" | "entail" | "e" => Ok(NliLabel::Entailment),
            "neutral" | "n" => Ok(NliLabel::Neutral),
            "contradiction" | "contradict" | "c" => Ok(NliLabel::Contradiction),
            other => Err(Error::invalid(format!("unknown NLI label `{other}`"))),
        }
    }
}

/// Entailment/neutral/contradiction probabilities for one sentence pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairJudgment {
    pub premise: String,
    pub hypothesis: String,
    pub p_entail: f64,
    pub p_neutral: f64,
    pub p_contradict: f64,
    pub label: NliLabel,
}

impl PairJudgment {
    /// Builds a judgment, checking that the triple is a distribution.
    /// Ties go entail > neutral > contradict.
    pub fn new(
        premise: impl Into<String>,
        hypothesis: impl Into<String>,
        probs: (f64, f64, f64),
    ) -> Result<Self> {
        let (e, n, c) = probs;
        if [e, n, c].iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Protocol(format!("bad probabilities {probs:?}")));
        }
        if (e + n + c - 1.0).abs() > 1e-4 {
            return Err(Error::Protocol(format!(
                "probabilities {probs:?} do not sum to 1"
            )));
        }
        let label = if e >= n && e >= c {
            NliLabel::Entailment
        } else if n >= c {
            NliLabel::Neutral
        } else {
            NliLabel::Contradiction
        };
        Ok(PairJudgment {
            premise: premise.into(),
            hypothesis: hypothesis.into(),
            p_entail: e,
            p_neutral: n,
            p_contradict: c,
            label,
        })
    }

    pub fn is_entailment(&self) -> bool {
        self.label == NliLabel::Entailment
    }
}

/// One decoded output with the backend's sequence score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub text: String,
    pub score: f64,
}

pub trait Generator: Send + Sync {
    fn generator_id(&self) -> String;

    /// Raw decode. `inputs` already matches the mode's arity.
    fn generate_raw(
        &self,
        mode: GenerationMode,
        inputs: &[&str],
        beam: usize,
        num_return: usize,
    ) -> Result<Vec<Candidate>>;
}

pub trait Embedder: Send + Sync {
    fn embedder_id(&self) -> String;

    fn embed_raw(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>>;
}

pub trait Judge: Send + Sync {
    /// Returns `(p_entail, p_neutral, p_contradict)` per pair.
    fn judge_raw(&self, pairs: &[(&str, &str)]) -> Result<Vec<(f64, f64, f64)>>;
}

/// A backend offering every capability.
pub trait Oracle: Generator + Embedder + Judge + crate::text::Tagger {
    fn backend_id(&self) -> String {
        self.generator_id()
    }
}

/// Decodes up to `k` candidates, best first, duplicate-free after
/// normalization.
pub fn generate(
    generator: &dyn Generator,
    mode: GenerationMode,
    inputs: &[&Sentence],
    k: usize,
    beam: usize,
) -> Result<Vec<Sentence>> {
    Ok(generate_scored(generator, mode, inputs, k, beam)?
        .into_iter()
        .map(|(s, _)| s)
        .collect())
}

pub fn generate_scored(
    generator: &dyn Generator,
    mode: GenerationMode,
    inputs: &[&Sentence],
    k: usize,
    beam: usize,
) -> Result<Vec<(Sentence, f64)>> {
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    if beam == 0 {
        return Err(Error::invalid("beam must be positive"));
    }
    if inputs.len() != mode.arity() {
        return Err(Error::invalid(format!(
            "mode {mode} takes {} input(s), got {}",
            mode.arity(),
            inputs.len()
        )));
    }
    let texts: Vec<&str> = inputs.iter().map(|s| s.text()).collect();
    let mut raw = generator.generate_raw(mode, &texts, beam, k.min(beam))?;
    raw.sort_by(|a, b| b.score.total_cmp(&a.score));
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for cand in raw {
        // Backends occasionally emit empty or punctuation-only strings.
        let Ok(sentence) = Sentence::new(cand.text) else {
            continue;
        };
        if seen.insert(sentence.key()) {
            out.push((sentence, cand.score));
        }
        if out.len() == k {
            break;
        }
    }
    Ok(out)
}

/// One unit vector per input.
pub fn embed(embedder: &dyn Embedder, texts: &[&Sentence]) -> Result<Vec<Vec<f64>>> {
    if texts.is_empty() {
        return Err(Error::invalid("embed needs at least one text"));
    }
    let raw: Vec<&str> = texts.iter().map(|s| s.text()).collect();
    embed_texts(embedder, &raw)
}

pub(crate) fn embed_texts(embedder: &dyn Embedder, texts: &[&str]) -> Result<Vec<Vec<f64>>> {
    let vectors = embedder.embed_raw(texts)?;
    if vectors.len() != texts.len() {
        return Err(Error::Protocol(format!(
            "asked for {} embeddings, got {}",
            texts.len(),
            vectors.len()
        )));
    }
    let dim = vectors.first().map_or(0, Vec::len);
    for v in &vectors {
        if v.len() != dim || dim == 0 {
            return Err(Error::Protocol("ragged or empty embedding".into()));
        }
        let norm = l2_norm(v);
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::Protocol(format!("embedding norm {norm} is not 1")));
        }
    }
    Ok(vectors)
}

pub fn embed_one(embedder: &dyn Embedder, text: &Sentence) -> Result<Vec<f64>> {
    Ok(embed(embedder, &[text])?.remove(0))
}

pub fn judge(j: &dyn Judge, premise: &Sentence, hypothesis: &Sentence) -> Result<PairJudgment> {
    Ok(judge_many(j, &[(premise, hypothesis)])?.remove(0))
}

pub fn judge_many(j: &dyn Judge, pairs: &[(&Sentence, &Sentence)]) -> Result<Vec<PairJudgment>> {
    if pairs.is_empty() {
        return Ok(Vec::new());
    }
    let raw: Vec<(&str, &str)> = pairs.iter().map(|(p, h)| (p.text(), h.text())).collect();
    let probs = j.judge_raw(&raw)?;
    if probs.len() != pairs.len() {
        return Err(Error::Protocol(format!(
            "asked for {} judgments, got {}",
            pairs.len(),
            probs.len()
        )));
    }
    pairs
        .iter()
        .zip(probs)
        .map(|((p, h), pr)| PairJudgment::new(p.text(), h.text(), pr))
        .collect()
}

/// Top-1 composition of two sentences (`conclude: s1 <sep> s2`).
pub fn compose(
    generator: &dyn Generator,
    s1: &Sentence,
    s2: &Sentence,
    beam: usize,
) -> Result<Sentence> {
    generate(generator, GenerationMode::Conclude, &[s1, s2], 1, beam)?
        .into_iter()
        .next()
        .ok_or_else(|| Error::CompositionFailed(format!("{s1} <sep> {s2}")))
}
