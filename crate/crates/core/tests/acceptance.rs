//! Acceptance gate. Each criterion is checked against an independent
//! reference computation and reported as one PASS/FAIL line.

mod common;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{gold_proofs, kb_files, pairs, s};
use proofsmith::augment::{self, AugmentShares, LabeledPair, AUGMENT_MODES};
use proofsmith::kb;
use proofsmith::metrics::{self, LexiconSubstituter, ScoreMode};
use proofsmith::oracle::{Embedder, GenerationMode, Generator, Lexicon, MockOracle, NliLabel};
use proofsmith::search::{
    self, filter_top_n, FactOutcome, Proof, ScoredCandidate, SearchConfig, SearchMethod, StepKind,
};
use proofsmith::text::{bleu4, jaccard, normalized_key, Sentence};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- metrics

fn brute_bleu(c: &[String], r: &[String]) -> f64 {
    let orders = c.len().min(4);
    let mut log_p = 0.0;
    for n in 1..=orders {
        let cg: Vec<&[String]> = (0..=c.len() - n).map(|i| &c[i..i + n]).collect();
        let rg: Vec<&[String]> = if r.len() >= n { (0..=r.len() - n).map(|i| &r[i..i + n]).collect() } else { vec![] };
        // Greedy one-to-one matching is exactly the clipped count.
        let mut used = vec![false; rg.len()];
        let mut matched = 0usize;
        for g in &cg {
            if let Some(k) = (0..rg.len()).find(|&k| !used[k] && rg[k] == *g) {
                used[k] = true;
                matched += 1;
            }
        }
        let num = if matched == 0 { 1e-9 } else { matched as f64 };
        log_p += (num / cg.len() as f64).ln();
    }
    let (cl, rl) = (c.len() as f64, r.len() as f64);
    let bp = if cl > rl { 1.0 } else { (1.0 - rl / cl).exp() };
    bp * (log_p / orders as f64).exp()
}

fn brute_jaccard(a: &[String], b: &[String]) -> f64 {
    let mut sa: Vec<&String> = a.iter().collect();
    sa.sort();
    sa.dedup();
    let mut sb: Vec<&String> = b.iter().collect();
    sb.sort();
    sb.dedup();
    let inter = sa.iter().filter(|x| sb.contains(x)).count();
    inter as f64 / (sa.len() + sb.len() - inter) as f64
}

fn random_tokens(rng: &mut ChaCha8Rng) -> Vec<String> {
    const VOCAB: [&str; 8] = ["the", "dog", "runs", "a", "cat", "fast", "park", "in"];
    let len = rng.gen_range(1..=12);
    (0..len).map(|_| VOCAB[rng.gen_range(0..VOCAB.len())].to_string()).collect()
}

fn metric_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    let cases = 500;
    for _ in 0..cases {
        let (a, b) = (random_tokens(&mut rng), random_tokens(&mut rng));
        let db = (bleu4(&a, &b).unwrap() - brute_bleu(&a, &b)).abs();
        let dj = (jaccard(&a, &b).unwrap() - brute_jaccard(&a, &b)).abs();
        worst = worst.max(db).max(dj);
        ensure(db <= 1e-9 && dj <= 1e-9, || format!("mismatch on {a:?} / {b:?}: bleu {db:e}, jaccard {dj:e}"))?;
    }
    let t = |x: &str| x.split(' ').map(str::to_string).collect::<Vec<_>>();
    let same = t("the dog runs in the park");
    ensure((bleu4(&same, &same).unwrap() - 1.0).abs() < 1e-12, || "bleu identity".into())?;
    ensure(jaccard(&same, &same).unwrap() == 1.0, || "jaccard identity".into())?;
    let other = t("cats sleep all day long now");
    ensure(bleu4(&other, &same).unwrap() < 1e-8, || "bleu disjoint".into())?;
    ensure(jaccard(&other, &same).unwrap() == 0.0, || "jaccard disjoint".into())?;
    Ok(format!("{cases} random pairs, max deviation {worst:.1e}"))
}

// ---------------------------------------------------------------- filter

fn node(text: String, sim: f64) -> Arc<ScoredCandidate> {
    Arc::new(ScoredCandidate {
        sentence: Sentence::new(text).unwrap(),
        sim,
        mode: Some(GenerationMode::Entail),
        parent: Some(ScoredCandidate::root(s("premise"), 0.0)),
        depth: 1,
    })
}

fn filter_contract() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut trials = 0;
    for _ in 0..60 {
        let size = rng.gen_range(1..=200);
        let words: Vec<String> = (0..size).map(|i| format!("w{} x{}", rng.gen_range(0..1000), i)).collect();
        // Few distinct similarity values, so boundary ties are common.
        let cands: Vec<Arc<ScoredCandidate>> = words
            .into_iter()
            .map(|w| node(w, rng.gen_range(0..6) as f64 / 5.0))
            .collect();
        for n in [1usize, 10, 50] {
            trials += 1;
            let keyed: Vec<(f64, String)> = cands.iter().map(|c| (c.sim, c.sentence.key())).collect();
            let beats = |a: &(f64, String), b: &(f64, String)| a.0 > b.0 || (a.0 == b.0 && a.1 < b.1);
            let mut expected: Vec<(usize, String)> = keyed
                .iter()
                .map(|c| (keyed.iter().filter(|o| beats(o, c)).count(), c.1.clone()))
                .filter(|(rank, _)| *rank < n)
                .collect();
            expected.sort();
            let got: Vec<String> = filter_top_n(&cands, n).iter().map(|c| c.sentence.key()).collect();
            let expected: Vec<String> = expected.into_iter().map(|(_, k)| k).collect();
            ensure(got == expected, || format!("size {size}, n {n}: {got:?} != {expected:?}"))?;
        }
    }
    Ok(format!("{trials} randomized sets, n in {{1, 10, 50}}"))
}

// ---------------------------------------------------------------- search

struct Brute<'a> {
    mock: &'a MockOracle,
    target: Vec<f64>,
}

impl Brute<'_> {
    fn sim(&self, text: &str) -> f64 {
        let v = self.mock.embed_raw(&[text]).unwrap().remove(0);
        v.iter().zip(&self.target).map(|(a, b)| a * b).sum()
    }

    /// Decoder output as the generation contract defines it: best score
    /// first, normalized duplicates removed, at most `beam`.
    fn children(&self, text: &str, beam: usize) -> Vec<(String, GenerationMode)> {
        let mut out = Vec::new();
        for mode in [GenerationMode::Entail, GenerationMode::Monotonic] {
            let mut raw = self.mock.generate_raw(mode, &[text], beam, beam).unwrap();
            raw.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap());
            let mut seen = HashSet::new();
            for c in raw {
                if seen.insert(normalized_key(&c.text)) && seen.len() <= beam {
                    out.push((c.text, mode));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
struct Chain {
    texts: Vec<String>,
    sims: Vec<f64>,
}

impl Chain {
    fn last_key(&self) -> String {
        normalized_key(self.texts.last().unwrap())
    }
    fn last_sim(&self) -> f64 {
        *self.sims.last().unwrap()
    }
}

/// Ranks by similarity, then normalized text, then depth; keeps `n`.
fn cut(mut chains: Vec<Chain>, n: usize) -> Vec<Chain> {
    chains.sort_by(|a, b| {
        b.last_sim()
            .partial_cmp(&a.last_sim())
            .unwrap()
            .then_with(|| a.last_key().cmp(&b.last_key()))
            .then_with(|| a.texts.len().cmp(&b.texts.len()))
    });
    chains.truncate(n);
    chains
}

/// Level and beam results recomputed from the full depth-2 chain set.
fn brute_search(mock: &MockOracle, premise: &str, hypothesis: &str, cfg: &SearchConfig) -> (Vec<Chain>, Vec<Chain>, usize) {
    let b = Brute { mock, target: mock.embed_raw(&[hypothesis]).unwrap().remove(0) };
    let pk = normalized_key(premise);
    // Every chain P -> a -> c the mock can produce.
    let mut depth1: Vec<Chain> = Vec::new();
    let mut seen1 = HashSet::new();
    for (a, _) in b.children(premise, cfg.beam) {
        let k = normalized_key(&a);
        if k != pk && seen1.insert(k) {
            depth1.push(Chain { sims: vec![b.sim(&a)], texts: vec![a] });
        }
    }
    let mut all_chains: Vec<Chain> = Vec::new();
    for a in &depth1 {
        for (c, _) in b.children(&a.texts[0], cfg.beam) {
            let k = normalized_key(&c);
            if k != pk && k != a.last_key() {
                all_chains.push(Chain { texts: vec![a.texts[0].clone(), c.clone()], sims: vec![a.sims[0], b.sim(&c)] });
            }
        }
    }
    let enumerated = depth1.len() + all_chains.len();

    let i1 = cut(depth1, cfg.n);
    let survivors: HashSet<String> = i1.iter().map(|c| c.last_key()).collect();
    // One chain per final text: the best-scoring parent, then the smaller one.
    let mut best: HashMap<String, Chain> = HashMap::new();
    let mut order: Vec<String> = Vec::new();
    for ch in all_chains.into_iter().filter(|c| survivors.contains(&normalized_key(&c.texts[0]))) {
        let k = ch.last_key();
        match best.get(&k) {
            None => {
                order.push(k.clone());
                best.insert(k, ch);
            }
            Some(cur) => {
                let (pn, pc) = (ch.sims[0], cur.sims[0]);
                if pn > pc || (pn == pc && normalized_key(&ch.texts[0]) < normalized_key(&cur.texts[0])) {
                    best.insert(k, ch);
                }
            }
        }
    }
    let i2 = cut(order.iter().map(|k| best[k].clone()).collect(), cfg.n);
    let level: Vec<Chain> = i2.iter().take(cfg.top_proofs).cloned().collect();

    let mut pool = i1.clone();
    let shallow: HashSet<String> = i1.iter().map(|c| c.last_key()).collect();
    pool.extend(i2.into_iter().filter(|c| !shallow.contains(&c.last_key())));
    let beam: Vec<Chain> = cut(pool, cfg.n).into_iter().take(cfg.top_proofs).collect();
    (level, beam, enumerated)
}

fn proof_texts(p: &Proof) -> Vec<String> {
    p.steps.iter().map(|s| s.text.text().to_string()).collect()
}

fn search_equivalence() -> Check {
    let mock = MockOracle::default();
    let cfg = SearchConfig::default();
    let mut beam_steps = Vec::new();
    let mut enumerated = 0;
    let tasks = pairs("search_pairs.tsv");
    ensure(tasks.len() == 20, || format!("fixture has {} pairs", tasks.len()))?;
    for (id, p, h) in &tasks {
        let (level, beam, count) = brute_search(&mock, p.text(), h.text(), &cfg);
        enumerated += count;
        let got_level: Vec<Vec<String>> = search::level_search(p, h, NliLabel::Entailment, &cfg, &mock, &mock)
            .unwrap()
            .iter()
            .map(proof_texts)
            .collect();
        let want_level: Vec<Vec<String>> = level.iter().map(|c| c.texts.clone()).collect();
        ensure(got_level == want_level, || format!("{id} level: {got_level:?} != {want_level:?}"))?;
        let got_beam: Vec<Proof> = search::beam_search(p, h, NliLabel::Entailment, &cfg, &mock, &mock).unwrap();
        let got_beam_texts: Vec<Vec<String>> = got_beam.iter().map(proof_texts).collect();
        let want_beam: Vec<Vec<String>> = beam.iter().map(|c| c.texts.clone()).collect();
        ensure(got_beam_texts == want_beam, || format!("{id} beam: {got_beam_texts:?} != {want_beam:?}"))?;
        beam_steps.extend(got_beam.iter().map(|p| p.num_inferred() as f64));
    }
    let mean_beam = beam_steps.iter().sum::<f64>() / beam_steps.len() as f64;
    Ok(format!(
        "20 pairs, {enumerated} enumerated chains; mean beam proof length {mean_beam:.2} (max_depth {})",
        cfg.max_depth
    ))
}

// ---------------------------------------------------------------- facts

fn fact_rules() -> Check {
    let mock = MockOracle::default();
    let cfg = SearchConfig::default();
    let index = kb::build_index(&kb_files(), &mock).unwrap();
    ensure(index.len() == 50, || format!("fixture KB has {} facts", index.len()))?;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let emb = |t: &str| mock.embed_raw(&[t]).unwrap().remove(0);
    let (mut discarded_total, mut fallbacks, mut closings) = (0, 0, 0);
    for (id, p, h) in pairs("fact_pairs.tsv") {
        let (proof, trace) = search::fact_proof_search(&p, &h, NliLabel::Entailment, &index, &cfg, &mock).unwrap();
        let hv = emb(h.text());
        let p_sim = dot(&emb(p.text()), &hv);
        let facts = kb::retrieve_for_pair(&index, &p, &h, cfg.fact_top_k, &mock, &mock, cfg.cluster_threshold).unwrap();
        ensure(trace.decisions.len() == facts.len(), || format!("{id}: decision count"))?;

        // (a) discard set recomputed from raw compositions.
        let mut want_discarded = BTreeSet::new();
        let mut want_kept = Vec::new();
        for f in &facts {
            let mut raw = mock.generate_raw(GenerationMode::Conclude, &[p.text(), &f.text], cfg.beam, 1).unwrap();
            raw.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap());
            let Some(top) = raw.first() else { continue };
            if dot(&emb(&top.text), &hv) < p_sim {
                want_discarded.insert(f.kb_id.clone());
            } else {
                want_kept.push((f.rank, f.kb_id.clone()));
            }
        }
        let got_discarded: BTreeSet<String> = trace
            .decisions
            .iter()
            .filter(|d| matches!(d.outcome, FactOutcome::Discarded { .. }))
            .map(|d| d.fact.kb_id.clone())
            .collect();
        ensure(got_discarded == want_discarded, || format!("{id}: discarded {got_discarded:?} != {want_discarded:?}"))?;
        discarded_total += got_discarded.len();

        // (b) fact steps follow retriever rank and never use a discarded fact.
        let fact_steps: Vec<(usize, String)> = proof
            .steps
            .iter()
            .filter(|s| s.kind == StepKind::Fact)
            .map(|s| (s.provenance.rank.unwrap(), s.provenance.kb_id.clone().unwrap()))
            .collect();
        ensure(fact_steps.windows(2).all(|w| w[0].0 < w[1].0), || format!("{id}: fact order {fact_steps:?}"))?;
        ensure(fact_steps.iter().all(|(_, k)| !want_discarded.contains(k)), || format!("{id}: discarded fact used"))?;
        want_kept.sort();
        let kept_ids: Vec<String> = want_kept.iter().map(|(_, k)| k.clone()).collect();
        let used: Vec<String> = fact_steps.iter().map(|(_, k)| k.clone()).collect();
        ensure(
            used.iter().all(|k| kept_ids.contains(k)) && used == trace.used,
            || format!("{id}: used {used:?}, kept {kept_ids:?}"),
        )?;
        for st in proof.steps.iter().filter(|s| s.kind == StepKind::Inferred && s.provenance.mode == Some(GenerationMode::Conclude)) {
            let prev = &proof.steps[st.j - 2];
            ensure(prev.kind == StepKind::Fact && st.provenance.refs.contains(&prev.j), || format!("{id}: fact not inline"))?;
        }

        // (c) fallback exactly when nothing survived.
        ensure(trace.fell_back == want_kept.is_empty(), || format!("{id}: fell_back {} with {} kept", trace.fell_back, want_kept.len()))?;
        // A fact whose composition fails is unusable, so it counts as discarded.
        let all_discarded = trace.decisions.iter().all(|d| !matches!(d.outcome, FactOutcome::Kept { .. }));
        ensure(trace.fell_back == all_discarded, || format!("{id}: fell_back {} but all_discarded {all_discarded}", trace.fell_back))?;
        fallbacks += trace.fell_back as usize;
        closings += trace.closing_steps;
    }
    ensure(fallbacks > 0 && discarded_total > 0, || "fixture never exercises discard and fallback".into())?;
    Ok(format!("11 pairs over 50 facts: {discarded_total} discarded, {fallbacks} fallback(s), {closings} closing step(s)"))
}

// ---------------------------------------------------------------- invariants

fn independent_invariants(p: &Proof) -> Result<(), String> {
    for (i, st) in p.steps.iter().enumerate() {
        if st.j != i + 1 {
            return Err(format!("non-contiguous index {}", st.j));
        }
        if st.provenance.refs.iter().any(|&r| r >= st.j) {
            return Err(format!("step {} references forward", st.j));
        }
        let inferred = st.kind == StepKind::Inferred;
        if inferred != st.provenance.mode.is_some() || (!inferred && st.provenance.kb_id.is_none()) {
            return Err(format!("step {} provenance/kind mismatch", st.j));
        }
    }
    // Every step must reach the premise (index 0) through its references.
    for st in p.steps.iter().filter(|s| s.kind == StepKind::Inferred) {
        let mut stack = vec![st.j];
        let mut seen = HashSet::new();
        let mut rooted = false;
        while let Some(j) = stack.pop() {
            if j == 0 {
                rooted = true;
                continue;
            }
            if !seen.insert(j) {
                return Err(format!("cycle through step {j}"));
            }
            stack.extend(&p.steps[j - 1].provenance.refs);
        }
        if !rooted {
            return Err(format!("step {} is not rooted at the premise", st.j));
        }
    }
    Ok(())
}

fn all_generated_proofs() -> Vec<Proof> {
    let mock = MockOracle::default();
    let cfg = SearchConfig::default();
    let mut out = Vec::new();
    for (_, p, h) in pairs("search_pairs.tsv") {
        for m in [SearchMethod::Level, SearchMethod::Beam, SearchMethod::Unguided] {
            out.extend(search::unconstrained_search(m, &p, &h, NliLabel::Entailment, &cfg, &mock, &mock).unwrap());
        }
    }
    let index = kb::build_index(&kb_files(), &mock).unwrap();
    for (_, p, h) in pairs("fact_pairs.tsv") {
        out.push(search::fact_proof_search(&p, &h, NliLabel::Entailment, &index, &cfg, &mock).unwrap().0);
    }
    let sub = LexiconSubstituter::from_lexicon(&Lexicon::builtin()).unwrap();
    for g in gold_proofs() {
        out.push(metrics::negate_gold(&g, &mock, 10).unwrap());
        out.push(metrics::perturb_gold(&g, 0.5, &sub, 1).unwrap());
        out.push(g);
    }
    out
}

fn proof_invariants() -> Check {
    let proofs = all_generated_proofs();
    for p in &proofs {
        let id = p.pair_id.clone().unwrap_or_default();
        p.validate().map_err(|e| format!("{id}: {e}"))?;
        independent_invariants(p).map_err(|e| format!("{id}: {e}"))?;
        let line = p.to_record().unwrap();
        let back = Proof::from_record(&line).map_err(|e| e.to_string())?;
        ensure(back.to_record().unwrap() == line && &back == p, || format!("{id}: record does not round-trip"))?;
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("all.rec");
    search::write_records(&path, &proofs).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    search::write_records(&path, &search::read_records(&path).unwrap()).unwrap();
    ensure(std::fs::read(&path).unwrap() == bytes, || "record file is not byte-stable".into())?;
    Ok(format!("{} proofs valid and byte-identical after round trip", proofs.len()))
}

// ---------------------------------------------------------------- baselines

fn baseline_separation() -> Check {
    let mock = MockOracle::default();
    let sub = LexiconSubstituter::from_lexicon(&Lexicon::builtin()).unwrap();
    let gold = gold_proofs();
    let score = |p: &Proof| metrics::score_proof(p, &mock, &mock, ScoreMode::Plain).unwrap();
    let (mut gc, mut nc, mut gj, mut pj) = (0.0, 0.0, 0.0, 0.0);
    for g in &gold {
        let id = g.pair_id.clone().unwrap();
        let neg = metrics::negate_gold(g, &mock, 10).unwrap();
        let per = metrics::perturb_gold(g, 0.5, &sub, 2024).unwrap();
        for (a, b) in g.steps.iter().zip(&per.steps) {
            let w = a.text.tokens().len();
            let changed = a.text.tokens().iter().zip(b.text.tokens()).filter(|(x, y)| x != y).count();
            let want = (0.5 * w as f64).ceil() as usize;
            ensure(b.text.tokens().len() == w && changed == want, || format!("{id} step {}: {changed} of {w} changed", a.j))?;
        }
        let (sg, sn, sp) = (score(g), score(&neg), score(&per));
        ensure(sn.correctness().unwrap() < sg.correctness().unwrap(), || format!("{id}: negation did not lower correctness"))?;
        gc += sg.correctness().unwrap();
        nc += sn.correctness().unwrap();
        gj += sg.mean_jaccard();
        pj += sp.mean_jaccard();
    }
    let n = gold.len() as f64;
    let (gc, nc, gj, pj) = (100.0 * gc / n, 100.0 * nc / n, 100.0 * gj / n, 100.0 * pj / n);
    ensure(nc < gc, || format!("negated {nc:.2} not below gold {gc:.2}"))?;
    ensure(pj < gj, || format!("perturbed JS {pj:.2} not below gold {gj:.2}"))?;
    Ok(format!("correctness gold {gc:.2}% vs negated {nc:.2}%; mean pair JS gold {gj:.2} vs perturbed {pj:.2}"))
}

// ---------------------------------------------------------------- report

fn report_shape() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let proofs = dir.path().join("gold.rec");
    search::write_records(&proofs, &gold_proofs()).unwrap();
    let report = dir.path().join("score.txt");
    let metrics_out = dir.path().join("gold.metrics.jsonl");
    let arg = |p: &std::path::Path| p.display().to_string();
    let code = proofsmith::cli::run([
        "proofsmith", "score", "--proofs", &arg(&proofs), "--out", &arg(&metrics_out), "--report", &arg(&report), "--name", "Gold",
    ]);
    ensure(code == 0, || format!("score exited {code}"))?;
    let table_out = dir.path().join("table.txt");
    let code = proofsmith::cli::run(["proofsmith", "report", &arg(&metrics_out), "--name", "Gold", "--out", &arg(&table_out)]);
    ensure(code == 0, || format!("report exited {code}"))?;
    let table = std::fs::read_to_string(&table_out).unwrap();
    ensure(table == std::fs::read_to_string(&report).unwrap(), || "score and report tables differ".into())?;
    let lines: Vec<&str> = table.lines().collect();
    let header: Vec<&str> = lines[0].split_whitespace().collect();
    let expected = [
        "Algorithm", "C:P-H", "C:P-I1", "C:I1-In", "C:In-H", "P-H:B4", "P-H:JS", "P-I1:B4", "P-I1:JS", "I1-In:B4",
        "I1-In:JS", "In-H:B4", "In-H:JS", "#Steps", "#KW:P", "#KW:I1-In", "#KW:H",
    ];
    ensure(header == expected, || format!("header {header:?}"))?;
    let row: Vec<&str> = lines[2].split_whitespace().collect();
    ensure(row.len() == expected.len(), || format!("row has {} cells", row.len()))?;
    ensure(row[13] == "2.00", || format!("#steps is {}", row[13]))?;
    let record: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("table.txt.json")).unwrap()).unwrap();
    ensure(record["rows"][0]["report"]["mean_steps"] == 2.0, || "record mean_steps".into())?;
    Ok(format!("17 columns, #Steps = {} over {} gold proofs", row[13], gold_proofs().len()))
}

// ---------------------------------------------------------------- augment

fn augment_mapping() -> Check {
    let mock = MockOracle::default();
    let premises: Vec<(String, Sentence)> = pairs("search_pairs.tsv").into_iter().map(|(id, p, _)| (id, p)).collect();
    let examples = augment::generate_augment_set(&premises, &AUGMENT_MODES, 2, &mock, 10).unwrap();
    let want = |m: GenerationMode| match m {
        GenerationMode::Entail | GenerationMode::Monotonic => NliLabel::Entailment,
        GenerationMode::Contradict => NliLabel::Contradiction,
        GenerationMode::Neutral => NliLabel::Neutral,
        other => panic!("unexpected mode {other}"),
    };
    for e in &examples {
        ensure(e.label == want(e.provenance_mode), || format!("{e:?} mislabelled"))?;
    }
    let base: Vec<LabeledPair> = (0..1000)
        .map(|i| LabeledPair { premise: format!("base premise {i}"), hypothesis: format!("base hypothesis {i}"), label: NliLabel::Neutral })
        .collect();
    let (rows, manifest) = augment::export_dataset(&base, 0.0, &examples, 0.01, AugmentShares::Equal, 9).unwrap();
    ensure(rows.len() == 10 && manifest.augment_count == 10, || format!("{} rows exported", rows.len()))?;
    let by_pair: HashMap<(String, String), NliLabel> =
        examples.iter().map(|e| ((e.premise.clone(), e.hypothesis.clone()), e.label)).collect();
    for r in &rows {
        ensure(by_pair.get(&(r.premise.clone(), r.hypothesis.clone())) == Some(&r.label), || format!("{r:?} label changed"))?;
    }
    let (mixed_a, _) = augment::export_dataset(&base, 0.05, &examples, 0.05, AugmentShares::Equal, 9).unwrap();
    let (mixed_b, _) = augment::export_dataset(&base, 0.05, &examples, 0.05, AugmentShares::Equal, 9).unwrap();
    ensure(mixed_a == mixed_b && mixed_a.len() == 100, || "5%+5% export is not seed-deterministic".into())?;
    let keys: HashSet<_> = mixed_a.iter().map(|r| (normalized_key(&r.premise), normalized_key(&r.hypothesis))).collect();
    ensure(keys.len() == mixed_a.len(), || "duplicate pair in export".into())?;
    Ok(format!("{} examples correctly labelled; 1% of 1,000 -> 10; 5%+5% export deterministic", examples.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check, Option<Duration>); 8] = [
        ("metric-oracle equivalence", metric_oracle, Some(Duration::from_secs(1))),
        ("filter contract", filter_contract, Some(Duration::from_secs(1))),
        ("search equivalence on mock corpus", search_equivalence, Some(Duration::from_secs(10))),
        ("fact-search rules", fact_rules, Some(Duration::from_secs(5))),
        ("proof invariants", proof_invariants, None),
        ("baseline separation", baseline_separation, None),
        ("report shape", report_shape, None),
        ("augment mapping", augment_mapping, None),
    ];
    let mut failed = 0;
    for (name, check, budget) in criteria {
        let t0 = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = t0.elapsed();
        let result = match (result, budget) {
            (Ok(_), Some(b)) if elapsed > b => Err(format!("took {elapsed:?}, budget {b:?}")),
            (r, _) => r,
        };
        match result {
            Ok(detail) => println!("[PASS] {name} ({:.3}s): {detail}", elapsed.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {name} ({:.3}s): {why}", elapsed.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
