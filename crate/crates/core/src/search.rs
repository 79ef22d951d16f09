//! Proof search: unconstrained level/beam search over `entail` and
//! `monotonic` generations, a hypothesis-blind decoding baseline, and
//! fact-guided search that composes retrieved KB facts into the premise.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kb::{retrieve_for_pair, Fact, KbIndex, DEFAULT_CLUSTER_THRESHOLD, DEFAULT_FACT_TOP_K};
use crate::oracle::{
    compose, embed_texts, generate, Embedder, GenerationMode, Generator, NliLabel, Oracle, DEFAULT_BEAM,
};
use crate::text::{cosine, Sentence};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub n: usize,
    pub max_depth: usize,
    pub top_proofs: usize,
    pub gen_modes: Vec<GenerationMode>,
    pub fact_top_k: usize,
    pub close_threshold: f64,
    pub beam: usize,
    pub cluster_threshold: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            n: 10,
            max_depth: 2,
            top_proofs: 2,
            gen_modes: vec![GenerationMode::Entail, GenerationMode::Monotonic],
            fact_top_k: DEFAULT_FACT_TOP_K,
            close_threshold: 0.80,
            beam: DEFAULT_BEAM,
            cluster_threshold: DEFAULT_CLUSTER_THRESHOLD,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::invalid(m.to_string()));
        if self.n == 0 {
            return bad("n must be at least 1");
        }
        if self.max_depth == 0 {
            return bad("max_depth must be at least 1");
        }
        if self.top_proofs == 0 {
            return bad("top_proofs must be at least 1");
        }
        if self.fact_top_k == 0 || self.beam == 0 {
            return bad("fact_top_k and beam must be positive");
        }
        if !(self.close_threshold > 0.0 && self.close_threshold <= 1.0) {
            return bad("close_threshold must be in (0, 1]");
        }
        if self.gen_modes.is_empty()
            || self
                .gen_modes
                .iter()
                .any(|m| !matches!(m, GenerationMode::Entail | GenerationMode::Monotonic))
        {
            return bad("gen_modes must be a non-empty subset of {entail, monotonic}");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMethod {
    Level,
    Beam,
    Facts,
    /// Decoder top-k without hypothesis guidance until the last step.
    #[serde(rename = "none")]
    Unguided,
}

impl SearchMethod {
    pub fn name(self) -> &'static str {
        match self {
            SearchMethod::Level => "level",
            SearchMethod::Beam => "beam",
            SearchMethod::Facts => "facts",
            SearchMethod::Unguided => "none",
        }
    }
}

impl fmt::Display for SearchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SearchMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "level" => Ok(SearchMethod::Level),
            "beam" => Ok(SearchMethod::Beam),
            "facts" => Ok(SearchMethod::Facts),
            "none" => Ok(SearchMethod::Unguided),
            _ => Err(Error::invalid(format!("unknown search method `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Inferred,
    Fact,
}

/// Where a step came from. Inferred steps carry `mode` and `refs` (0 is the
/// premise); fact steps carry `kb_id` and `rank`. `transform` marks steps
/// rewritten by a baseline corruption (`negated`, `perturbed`).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<GenerationMode>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub refs: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kb_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn inferred(mode: GenerationMode, refs: Vec<usize>) -> Self {
        Provenance {
            mode: Some(mode),
            refs,
            ..Default::default()
        }
    }

    pub fn fact(kb_id: &str, rank: usize) -> Self {
        Provenance {
            kb_id: Some(kb_id.to_string()),
            rank: Some(rank),
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProofStep {
    pub j: usize,
    pub kind: StepKind,
    pub text: Sentence,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Proof {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_id: Option<String>,
    pub premise: Sentence,
    pub hypothesis: Sentence,
    pub label: NliLabel,
    pub search_method: SearchMethod,
    pub config: SearchConfig,
    pub steps: Vec<ProofStep>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl Proof {
    pub fn new(premise: Sentence, hypothesis: Sentence, label: NliLabel, method: SearchMethod, config: SearchConfig) -> Self {
        Proof {
            pair_id: None,
            premise,
            hypothesis,
            label,
            search_method: method,
            config,
            steps: Vec::new(),
            warnings: Vec::new(),
        }
    }

    /// Appends a step and returns its index.
    pub fn push(&mut self, kind: StepKind, text: Sentence, provenance: Provenance) -> usize {
        let j = self.steps.len() + 1;
        self.steps.push(ProofStep {
            j,
            kind,
            text,
            provenance,
        });
        j
    }

    pub fn inferred_steps(&self) -> impl Iterator<Item = &ProofStep> {
        self.steps.iter().filter(|s| s.kind == StepKind::Inferred)
    }

    pub fn num_inferred(&self) -> usize {
        self.inferred_steps().count()
    }

    pub fn last_inferred(&self) -> Option<&ProofStep> {
        self.steps.iter().rev().find(|s| s.kind == StepKind::Inferred)
    }

    /// Checks contiguity (`j` = 1..m), the order property (every reference
    /// points strictly backwards, hence no cycles) and per-kind provenance.
    pub fn validate(&self) -> Result<()> {
        for (i, step) in self.steps.iter().enumerate() {
            let j = i + 1;
            if step.j != j {
                return Err(Error::invalid(format!("step {i} is numbered {}, expected {j}", step.j)));
            }
            let p = &step.provenance;
            match step.kind {
                StepKind::Inferred => {
                    if p.mode.is_none() || p.kb_id.is_some() || p.rank.is_some() {
                        return Err(Error::invalid(format!("inferred step {j} needs a mode and no fact id")));
                    }
                    if p.refs.is_empty() {
                        return Err(Error::invalid(format!("inferred step {j} references nothing")));
                    }
                }
                StepKind::Fact => {
                    if p.mode.is_some() || !p.refs.is_empty() || p.kb_id.is_none() {
                        return Err(Error::invalid(format!("fact step {j} must carry a kb_id and no mode")));
                    }
                }
            }
            if let Some(r) = p.refs.iter().find(|&&r| r >= j) {
                return Err(Error::invalid(format!("step {j} references later step {r}")));
            }
        }
        Ok(())
    }

    pub fn to_record(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_record(line: &str) -> Result<Self> {
        let proof: Proof = serde_json::from_str(line)?;
        proof.validate()?;
        Ok(proof)
    }
}

/// Writes one JSON proof per line.
pub fn write_records(path: &Path, proofs: &[Proof]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for p in proofs {
        writeln!(w, "{}", p.to_record()?).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_records(path: &Path) -> Result<Vec<Proof>> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            Proof::from_record(l).map_err(|e| Error::Format {
                path: path.to_path_buf(),
                line: i + 1,
                msg: e.to_string(),
            })
        })
        .collect()
}

/// A search node: a sentence, its similarity to the hypothesis, and the
/// chain back to the premise (the root has no parent and depth 0).
#[derive(Clone, Debug)]
pub struct ScoredCandidate {
    pub sentence: Sentence,
    pub sim: f64,
    pub mode: Option<GenerationMode>,
    pub parent: Option<Arc<ScoredCandidate>>,
    pub depth: usize,
}

impl ScoredCandidate {
    pub fn root(premise: Sentence, sim: f64) -> Arc<Self> {
        Arc::new(ScoredCandidate {
            sentence: premise,
            sim,
            mode: None,
            parent: None,
            depth: 0,
        })
    }

    /// Nodes from depth 1 down to this one (the premise root excluded).
    pub fn chain(self: &Arc<Self>) -> Vec<Arc<ScoredCandidate>> {
        let mut out = Vec::new();
        let mut cur = Some(self.clone());
        while let Some(node) = cur {
            if node.parent.is_none() {
                break;
            }
            cur = node.parent.clone();
            out.push(node);
        }
        out.reverse();
        out
    }

    fn lineage_keys(&self) -> HashSet<String> {
        let mut keys = HashSet::new();
        let mut cur = Some(self);
        while let Some(node) = cur {
            keys.insert(node.sentence.key());
            cur = node.parent.as_deref();
        }
        keys
    }

    fn parent_key(&self) -> String {
        self.parent.as_ref().map(|p| p.sentence.key()).unwrap_or_default()
    }
}

/// Memoizes similarity to one hypothesis.
pub struct SimCache<'a> {
    embedder: &'a dyn Embedder,
    target: Vec<f64>,
    memo: HashMap<String, f64>,
}

impl<'a> SimCache<'a> {
    pub fn new(embedder: &'a dyn Embedder, hypothesis: &Sentence) -> Result<Self> {
        let target = embed_texts(embedder, &[hypothesis.text()])?.remove(0);
        Ok(SimCache {
            embedder,
            target,
            memo: HashMap::new(),
        })
    }

    pub fn sims(&mut self, sentences: &[&Sentence]) -> Result<Vec<f64>> {
        let mut missing: Vec<&str> = Vec::new();
        for s in sentences {
            if !self.memo.contains_key(s.text()) && !missing.contains(&s.text()) {
                missing.push(s.text());
            }
        }
        if !missing.is_empty() {
            let vecs = embed_texts(self.embedder, &missing)?;
            for (t, v) in missing.into_iter().zip(vecs) {
                self.memo.insert(t.to_string(), cosine(&v, &self.target)?);
            }
        }
        Ok(sentences.iter().map(|s| self.memo[s.text()]).collect())
    }

    pub fn sim(&mut self, s: &Sentence) -> Result<f64> {
        Ok(self.sims(&[s])?[0])
    }
}

/// Generates from every frontier node in every mode and scores the results.
///
/// Candidates equal (after normalization) to their own premise or any
/// ancestor are dropped. Surface duplicates collapse to one candidate, keeping
/// the parent with the higher similarity, then the lexicographically smaller
/// parent text, then the first generated. Output is in generation order.
pub fn expand(
    frontier: &[Arc<ScoredCandidate>],
    modes: &[GenerationMode],
    generator: &dyn Generator,
    sims: &mut SimCache<'_>,
    beam: usize,
) -> Result<Vec<Arc<ScoredCandidate>>> {
    let mut raw: Vec<(Sentence, GenerationMode, Arc<ScoredCandidate>)> = Vec::new();
    for item in frontier {
        let lineage = item.lineage_keys();
        for &mode in modes {
            for s in generate(generator, mode, &[&item.sentence], beam, beam)? {
                if !lineage.contains(&s.key()) {
                    raw.push((s, mode, item.clone()));
                }
            }
        }
    }
    let sentences: Vec<&Sentence> = raw.iter().map(|(s, _, _)| s).collect();
    let scores = if sentences.is_empty() { Vec::new() } else { sims.sims(&sentences)? };

    let mut out: Vec<Arc<ScoredCandidate>> = Vec::new();
    let mut slot: HashMap<String, usize> = HashMap::new();
    for ((sentence, mode, parent), sim) in raw.into_iter().zip(scores) {
        let cand = Arc::new(ScoredCandidate {
            sentence,
            sim,
            mode: Some(mode),
            depth: parent.depth + 1,
            parent: Some(parent),
        });
        match slot.get(&cand.sentence.key()) {
            None => {
                slot.insert(cand.sentence.key(), out.len());
                out.push(cand);
            }
            Some(&i) => {
                let cur = &out[i];
                let (new_p, cur_p) = (cand.parent.as_ref().unwrap(), cur.parent.as_ref().unwrap());
                let better = new_p.sim > cur_p.sim || (new_p.sim == cur_p.sim && cand.parent_key() < cur.parent_key());
                if better {
                    out[i] = cand;
                }
            }
        }
    }
    Ok(out)
}

/// Total order used for every ranking: similarity descending, then
/// normalized text, then depth, then parent text.
pub fn rank_order(a: &ScoredCandidate, b: &ScoredCandidate) -> std::cmp::Ordering {
    b.sim
        .total_cmp(&a.sim)
        .then_with(|| a.sentence.key().cmp(&b.sentence.key()))
        .then_with(|| a.depth.cmp(&b.depth))
        .then_with(|| a.parent_key().cmp(&b.parent_key()))
}

/// The `n` candidates closest to the hypothesis.
pub fn filter_top_n(candidates: &[Arc<ScoredCandidate>], n: usize) -> Vec<Arc<ScoredCandidate>> {
    let mut sorted = candidates.to_vec();
    sorted.sort_by(|a, b| rank_order(a, b));
    sorted.truncate(n);
    sorted
}

fn proof_from_chain(
    node: &Arc<ScoredCandidate>,
    premise: &Sentence,
    hypothesis: &Sentence,
    label: NliLabel,
    method: SearchMethod,
    cfg: &SearchConfig,
) -> Proof {
    let mut proof = Proof::new(premise.clone(), hypothesis.clone(), label, method, cfg.clone());
    for step in node.chain() {
        let prev = proof.steps.len();
        proof.push(
            StepKind::Inferred,
            step.sentence.clone(),
            Provenance::inferred(step.mode.expect("non-root node"), vec![prev]),
        );
    }
    proof
}

fn empty_proof(premise: &Sentence, hypothesis: &Sentence, label: NliLabel, method: SearchMethod, cfg: &SearchConfig, warning: &str) -> Proof {
    let mut p = Proof::new(premise.clone(), hypothesis.clone(), label, method, cfg.clone());
    p.warnings.push(warning.to_string());
    p
}

/// Filtered frontiers `i_1, i_2, ...` of level search. Stops early (with a
/// warning) when a level generates nothing.
pub fn search_levels(
    premise: &Sentence,
    cfg: &SearchConfig,
    generator: &dyn Generator,
    sims: &mut SimCache<'_>,
    warnings: &mut Vec<String>,
) -> Result<Vec<Vec<Arc<ScoredCandidate>>>> {
    let root = ScoredCandidate::root(premise.clone(), sims.sim(premise)?);
    let mut frontier = vec![root];
    let mut levels = Vec::new();
    for depth in 1..=cfg.max_depth {
        let cands = expand(&frontier, &cfg.gen_modes, generator, sims, cfg.beam)?;
        if cands.is_empty() {
            warnings.push(format!("no candidates at depth {depth}; proofs stop at depth {}", depth - 1));
            break;
        }
        frontier = filter_top_n(&cands, cfg.n);
        levels.push(frontier.clone());
    }
    Ok(levels)
}

/// Level search: expand-then-filter `max_depth` times and unroll the final
/// frontier into proofs, best final similarity first.
pub fn level_search(
    premise: &Sentence,
    hypothesis: &Sentence,
    label: NliLabel,
    cfg: &SearchConfig,
    generator: &dyn Generator,
    embedder: &dyn Embedder,
) -> Result<Vec<Proof>> {
    cfg.validate()?;
    let mut sims = SimCache::new(embedder, hypothesis)?;
    let mut warnings = Vec::new();
    let levels = search_levels(premise, cfg, generator, &mut sims, &mut warnings)?;
    let Some(last) = levels.last() else {
        return Ok(vec![empty_proof(premise, hypothesis, label, SearchMethod::Level, cfg, &warnings[0])]);
    };
    Ok(last
        .iter()
        .take(cfg.top_proofs)
        .map(|node| {
            let mut p = proof_from_chain(node, premise, hypothesis, label, SearchMethod::Level, cfg);
            p.warnings = warnings.clone();
            p
        })
        .collect())
}

/// The merged pool of every filtered level, duplicates resolved in favour of
/// the shallower chain, cut to the top `n`.
pub fn beam_pool(levels: &[Vec<Arc<ScoredCandidate>>], n: usize) -> Vec<Arc<ScoredCandidate>> {
    let mut seen = HashSet::new();
    let mut pool = Vec::new();
    for level in levels {
        for c in level {
            if seen.insert(c.sentence.key()) {
                pool.push(c.clone());
            }
        }
    }
    filter_top_n(&pool, n)
}

/// Beam search: level search, but the final cut ranks all depths together,
/// so proofs may stop early.
pub fn beam_search(
    premise: &Sentence,
    hypothesis: &Sentence,
    label: NliLabel,
    cfg: &SearchConfig,
    generator: &dyn Generator,
    embedder: &dyn Embedder,
) -> Result<Vec<Proof>> {
    cfg.validate()?;
    let mut sims = SimCache::new(embedder, hypothesis)?;
    let mut warnings = Vec::new();
    let levels = search_levels(premise, cfg, generator, &mut sims, &mut warnings)?;
    if levels.is_empty() {
        return Ok(vec![empty_proof(premise, hypothesis, label, SearchMethod::Beam, cfg, &warnings[0])]);
    }
    Ok(beam_pool(&levels, cfg.n)
        .iter()
        .take(cfg.top_proofs)
        .map(|node| {
            let mut p = proof_from_chain(node, premise, hypothesis, label, SearchMethod::Beam, cfg);
            p.warnings = warnings.clone();
            p
        })
        .collect())
}

/// Baseline without search: intermediate levels keep the first `n`
/// candidates in decoder order, ignoring the hypothesis; only the final
/// level is ranked by similarity.
pub fn unguided_search(
    premise: &Sentence,
    hypothesis: &Sentence,
    label: NliLabel,
    cfg: &SearchConfig,
    generator: &dyn Generator,
    embedder: &dyn Embedder,
) -> Result<Vec<Proof>> {
    cfg.validate()?;
    let mut sims = SimCache::new(embedder, hypothesis)?;
    let mut frontier = vec![ScoredCandidate::root(premise.clone(), sims.sim(premise)?)];
    let mut warnings = Vec::new();
    for depth in 1..=cfg.max_depth {
        let mut cands = expand(&frontier, &cfg.gen_modes, generator, &mut sims, cfg.beam)?;
        if cands.is_empty() {
            warnings.push(format!("no candidates at depth {depth}; proofs stop at depth {}", depth - 1));
            break;
        }
        if depth == cfg.max_depth {
            cands = filter_top_n(&cands, cfg.n);
        } else {
            cands.truncate(cfg.n);
        }
        frontier = cands;
    }
    if frontier[0].depth == 0 {
        return Ok(vec![empty_proof(premise, hypothesis, label, SearchMethod::Unguided, cfg, &warnings[0])]);
    }
    let frontier = filter_top_n(&frontier, cfg.top_proofs);
    Ok(frontier
        .iter()
        .map(|node| {
            let mut p = proof_from_chain(node, premise, hypothesis, label, SearchMethod::Unguided, cfg);
            p.warnings = warnings.clone();
            p
        })
        .collect())
}

/// Dispatches the unconstrained methods.
pub fn unconstrained_search(
    method: SearchMethod,
    premise: &Sentence,
    hypothesis: &Sentence,
    label: NliLabel,
    cfg: &SearchConfig,
    generator: &dyn Generator,
    embedder: &dyn Embedder,
) -> Result<Vec<Proof>> {
    match method {
        SearchMethod::Level => level_search(premise, hypothesis, label, cfg, generator, embedder),
        SearchMethod::Beam => beam_search(premise, hypothesis, label, cfg, generator, embedder),
        SearchMethod::Unguided => unguided_search(premise, hypothesis, label, cfg, generator, embedder),
        SearchMethod::Facts => Err(Error::invalid("fact search needs a knowledge base")),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FactOutcome {
    /// `compose(P, F)` stayed at least as close to H as P.
    Kept { composed: String, sim: f64 },
    /// `compose(P, F)` moved away from H.
    Discarded { composed: String, sim: f64 },
    /// The composer produced nothing for this fact.
    CompositionFailed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactDecision {
    pub fact: Fact,
    pub outcome: FactOutcome,
}

/// Everything fact search decided along the way.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactTrace {
    pub premise_sim: f64,
    pub decisions: Vec<FactDecision>,
    /// kb_ids composed into the chain, in order.
    pub used: Vec<String>,
    pub closing_steps: usize,
    pub fell_back: bool,
}

/// Fact-guided search.
///
/// 1. retrieve `fact_top_k` facts for the pair;
/// 2. compose P with each fact and discard facts whose composition is less
///    similar to H than P is;
/// 3. compose the survivors into a chain in retriever-rank order, each fact
///    step emitted right before the composition that consumes it;
/// 4. if the chain's last step is below `close_threshold`, greedily add up to
///    `max_depth` entail/monotonic steps while similarity keeps improving.
///
/// When no fact survives, the result is the best beam-search proof, flagged.
pub fn fact_proof_search(
    premise: &Sentence,
    hypothesis: &Sentence,
    label: NliLabel,
    index: &KbIndex,
    cfg: &SearchConfig,
    oracle: &dyn Oracle,
) -> Result<(Proof, FactTrace)> {
    cfg.validate()?;
    let facts = retrieve_for_pair(index, premise, hypothesis, cfg.fact_top_k, oracle, oracle, cfg.cluster_threshold)?;
    let mut sims = SimCache::new(oracle, hypothesis)?;
    let premise_sim = sims.sim(premise)?;
    let mut trace = FactTrace {
        premise_sim,
        decisions: Vec::new(),
        used: Vec::new(),
        closing_steps: 0,
        fell_back: false,
    };

    let mut survivors: Vec<(Fact, Sentence)> = Vec::new();
    for fact in facts {
        let fs = Sentence::new(fact.text.clone())?;
        let outcome = match compose(oracle, premise, &fs, cfg.beam) {
            Err(Error::CompositionFailed(_)) => FactOutcome::CompositionFailed,
            Err(e) => return Err(e),
            Ok(ik) => {
                let sim = sims.sim(&ik)?;
                if sim < premise_sim {
                    FactOutcome::Discarded { composed: ik.text().to_string(), sim }
                } else {
                    survivors.push((fact.clone(), fs));
                    FactOutcome::Kept { composed: ik.text().to_string(), sim }
                }
            }
        };
        trace.decisions.push(FactDecision { fact, outcome });
    }

    let mut proof = Proof::new(premise.clone(), hypothesis.clone(), label, SearchMethod::Facts, cfg.clone());
    let mut node = ScoredCandidate::root(premise.clone(), premise_sim);
    let mut node_j = 0;
    for (fact, fs) in &survivors {
        let composed = match compose(oracle, &node.sentence, fs, cfg.beam) {
            Ok(c) => c,
            Err(Error::CompositionFailed(_)) => {
                proof.warnings.push(format!("fact {} did not compose with step {node_j}; skipped", fact.kb_id));
                continue;
            }
            Err(e) => return Err(e),
        };
        if node.lineage_keys().contains(&composed.key()) {
            proof.warnings.push(format!("fact {} added nothing to step {node_j}; skipped", fact.kb_id));
            continue;
        }
        let fact_j = proof.push(StepKind::Fact, fs.clone(), Provenance::fact(&fact.kb_id, fact.rank));
        let sim = sims.sim(&composed)?;
        let j = proof.push(
            StepKind::Inferred,
            composed.clone(),
            Provenance::inferred(GenerationMode::Conclude, vec![node_j, fact_j]),
        );
        trace.used.push(fact.kb_id.clone());
        node = Arc::new(ScoredCandidate {
            sentence: composed,
            sim,
            mode: Some(GenerationMode::Conclude),
            depth: node.depth + 1,
            parent: Some(node),
        });
        node_j = j;
    }

    if trace.used.is_empty() {
        let mut fallback = beam_search(premise, hypothesis, label, cfg, oracle, oracle)?
            .into_iter()
            .next()
            .expect("beam search returns at least one proof");
        fallback.search_method = SearchMethod::Facts;
        fallback.warnings.push("every retrieved fact was discarded; fell back to beam search".into());
        trace.fell_back = true;
        return Ok((fallback, trace));
    }

    if node.sim < cfg.close_threshold {
        let closing = [GenerationMode::Entail, GenerationMode::Monotonic];
        for _ in 0..cfg.max_depth {
            let cands = expand(std::slice::from_ref(&node), &closing, oracle, &mut sims, cfg.beam)?;
            let Some(best) = filter_top_n(&cands, 1).pop() else { break };
            if best.sim <= node.sim {
                break;
            }
            node_j = proof.push(
                StepKind::Inferred,
                best.sentence.clone(),
                Provenance::inferred(best.mode.expect("generated node"), vec![node_j]),
            );
            trace.closing_steps += 1;
            node = best;
            if node.sim >= cfg.close_threshold {
                break;
            }
        }
    }
    Ok((proof, trace))
}
