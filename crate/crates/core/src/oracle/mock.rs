//! Deterministic, lexicon-driven stand-in for the model sidecar.
//!
//! Every answer is a pure function of the request and the [`Lexicon`], so
//! search and metric behavior can be enumerated exhaustively in tests.
//!
//! Generation rules, per mode:
//!
//! * `entail`: replace one content word by its hypernym (one candidate per
//!   eligible position, left to right).
//! * `monotonic`: drop one adjective, drop the prepositional phrase after
//!   the main verb, or replace one word by a synonym.
//! * `contradict`: insert a negation (after the copula, as `does not` before
//!   the main verb, or as a sentence prefix); an already negated sentence is
//!   un-negated.
//! * `neutral`: append each of the lexicon's neutral phrases.
//! * `conclude`: `S is X` + `all X N are Y` gives `S is Y`; `a X is a Y`
//!   substitutes Y for X in the other sentence; `A v1 .. X ..` + `X v2 B`
//!   gives `A v2 B`.
//! * `explain` / `proof`: `a X is a Y` for every word pair licensed by a
//!   hypernym edge between the two inputs.
//!
//! Embeddings are signed feature hashes (FNV-1a, 64 bit) over the lemma and
//! the lexicon class of each content word, L2-normalized, with
//! [`MOCK_EMBED_DIM`] dimensions. Class features are keyed `class:<name>`.

use crate::error::{Error, Result};
use crate::oracle::{Candidate, Embedder, GenerationMode, Generator, Judge, Lexicon, Oracle};
use crate::text::{
    is_closed_class, l2_normalize, normalize_tokens, verb_lemma, HeuristicTagger, PosTag, Tagger,
    TokenTag,
};

pub const MOCK_EMBED_DIM: usize = 512;

const NEGATIONS: &[&str] = &["not", "never", "no", "nobody", "nothing"];
const COPULAS: &[&str] = &["is", "are", "was", "were", "am"];
const PREPOSITIONS: &[&str] = &[
    "in", "on", "at", "with", "under", "over", "near", "by", "from", "into", "onto", "behind",
    "beside", "across", "through", "along", "around", "inside", "outside",
];

const P_ENTAIL: (f64, f64, f64) = (0.90, 0.07, 0.03);
const P_NEUTRAL: (f64, f64, f64) = (0.10, 0.80, 0.10);
const P_CONTRADICT: (f64, f64, f64) = (0.03, 0.07, 0.90);

#[derive(Clone, Debug)]
pub struct MockOracle {
    lexicon: Lexicon,
    tagger: HeuristicTagger,
}

impl Default for MockOracle {
    fn default() -> Self {
        Self::new(Lexicon::builtin())
    }
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn toks(text: &str) -> Vec<String> {
    normalize_tokens(text).unwrap_or_default()
}

fn starts_with_vowel(word: &str) -> bool {
    word.starts_with(['a', 'e', 'i', 'o', 'u'])
}

/// Makes an `a`/`an` at `pos - 1` agree with the word at `pos`.
fn fix_article(tokens: &mut [String], pos: usize) {
    if pos == 0 || pos >= tokens.len() {
        return;
    }
    let art = &tokens[pos - 1];
    if art == "a" || art == "an" {
        tokens[pos - 1] = if starts_with_vowel(&tokens[pos]) {
            "an".into()
        } else {
            "a".into()
        };
    }
}

fn third_person_base(verb: &str) -> String {
    for suffix in ["ches", "shes", "sses", "xes"] {
        if verb.ends_with(suffix) {
            return verb[..verb.len() - 2].to_string();
        }
    }
    if let Some(stem) = verb.strip_suffix("ies") {
        return format!("{stem}y");
    }
    verb.strip_suffix('s').unwrap_or(verb).to_string()
}

fn third_person(base: &str) -> String {
    if ["s", "x", "ch", "sh"].iter().any(|e| base.ends_with(e)) {
        format!("{base}es")
    } else {
        format!("{base}s")
    }
}

impl MockOracle {
    pub fn new(lexicon: Lexicon) -> Self {
        MockOracle {
            lexicon,
            tagger: HeuristicTagger::new(),
        }
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    fn tags(&self, tokens: &[String]) -> Vec<PosTag> {
        tokens.iter().map(|t| self.tagger.tag_token(t)).collect()
    }

    fn first_verb(&self, tokens: &[String]) -> Option<usize> {
        self.tags(tokens).iter().position(|t| *t == PosTag::Verb)
    }

    fn replace_word(&self, tokens: &[String], pos: usize, base: &str, plural: bool) -> Vec<String> {
        let mut out = tokens.to_vec();
        out[pos] = self.lexicon.inflect(base, plural);
        fix_article(&mut out, pos);
        out
    }

    fn entail(&self, tokens: &[String]) -> Vec<Vec<String>> {
        let mut out = Vec::new();
        for (i, tok) in tokens.iter().enumerate() {
            if is_closed_class(tok) {
                continue;
            }
            let (base, plural) = self.lexicon.base_form(tok);
            if let Some(parent) = self.lexicon.parent(&base) {
                out.push(self.replace_word(tokens, i, parent, plural));
            }
        }
        out
    }

    fn monotonic(&self, tokens: &[String]) -> Vec<Vec<String>> {
        let mut out = Vec::new();
        let tags = self.tags(tokens);
        for (i, tag) in tags.iter().enumerate() {
            if *tag == PosTag::Adjective && tokens.len() > 2 {
                let mut t = tokens.to_vec();
                t.remove(i);
                fix_article(&mut t, i);
                out.push(t);
            }
        }
        if let Some(v) = tags.iter().position(|t| *t == PosTag::Verb) {
            if let Some(p) = (v + 1..tokens.len()).find(|&j| PREPOSITIONS.contains(&tokens[j].as_str())) {
                if p >= 2 {
                    out.push(tokens[..p].to_vec());
                }
            }
        }
        for (i, tok) in tokens.iter().enumerate() {
            if is_closed_class(tok) {
                continue;
            }
            let direct: Vec<String> = self.lexicon.synonyms_of(tok).map(str::to_string).collect();
            if !direct.is_empty() {
                for s in direct {
                    out.push(self.replace_word(tokens, i, &s, false));
                }
                continue;
            }
            let (base, plural) = self.lexicon.base_form(tok);
            let syns: Vec<String> = self.lexicon.synonyms_of(&base).map(str::to_string).collect();
            for s in syns {
                out.push(self.replace_word(tokens, i, &s, plural));
            }
        }
        out
    }

    fn contradict(&self, tokens: &[String]) -> Vec<Vec<String>> {
        let mut t = tokens.to_vec();
        if let Some(i) = t.iter().position(|w| NEGATIONS.contains(&w.as_str())) {
            t.remove(i);
            if i > 0 && ["does", "do", "did"].contains(&t[i - 1].as_str()) {
                let aux = t.remove(i - 1);
                if aux == "does" && i - 1 < t.len() {
                    t[i - 1] = third_person(&t[i - 1]);
                }
            }
            if t.is_empty() {
                return Vec::new();
            }
            return vec![t];
        }
        if let Some(c) = t.iter().position(|w| COPULAS.contains(&w.as_str())) {
            t.insert(c + 1, "not".into());
            return vec![t];
        }
        if let Some(v) = self.first_verb(&t) {
            let verb = t[v].clone();
            let replacement = if verb.ends_with('s') && !verb.ends_with("ss") {
                vec!["does".to_string(), "not".into(), third_person_base(&verb)]
            } else {
                vec!["do".to_string(), "not".into(), verb]
            };
            t.splice(v..=v, replacement);
            return vec![t];
        }
        let mut out: Vec<String> = ["it", "is", "not", "true", "that"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        out.extend(t);
        vec![out]
    }

    fn neutral(&self, tokens: &[String]) -> Vec<Vec<String>> {
        self.lexicon
            .neutral_additions()
            .iter()
            .map(|a| {
                let mut t = tokens.to_vec();
                t.extend(toks(a));
                t
            })
            .collect()
    }

    /// `S is X` + `all X N are Y` -> `S is Y`.
    fn category_rule(&self, rule: &[String], other: &[String]) -> Option<Vec<String>> {
        if rule.first().map(String::as_str) != Some("all") {
            return None;
        }
        let c = rule.iter().position(|w| w == "are" || w == "is")?;
        let mut class: Vec<String> = rule[1..c].to_vec();
        if class.len() > 1 {
            class.pop();
        }
        let target = &rule[c + 1..];
        if class.is_empty() || target.is_empty() {
            return None;
        }
        let c2 = other.iter().position(|w| COPULAS.contains(&w.as_str()))?;
        if c2 == 0 || other[c2 + 1..] != class[..] {
            return None;
        }
        let mut out = other[..=c2].to_vec();
        out.extend_from_slice(target);
        Some(out)
    }

    /// `a X is a Y` substitutes Y for X in `other`.
    fn isa_rule(&self, rule: &[String], other: &[String]) -> Option<Vec<String>> {
        let mut i = 0;
        if matches!(rule.first().map(String::as_str), Some("a" | "an")) {
            i = 1;
        }
        let x = rule.get(i)?;
        if is_closed_class(x) || !matches!(rule.get(i + 1).map(String::as_str), Some("is" | "are")) {
            return None;
        }
        let mut j = i + 2;
        if matches!(rule.get(j).map(String::as_str), Some("a" | "an")) {
            j += 1;
        }
        if rule.len() != j + 1 {
            return None;
        }
        let y = &rule[j];
        if is_closed_class(y) {
            return None;
        }
        let (x_base, _) = self.lexicon.base_form(x);
        let pos = other
            .iter()
            .position(|w| self.lexicon.base_form(w).0 == x_base || w == x)?;
        let (_, plural) = self.lexicon.base_form(&other[pos]);
        let (y_base, _) = self.lexicon.base_form(y);
        let out = self.replace_word(other, pos, &y_base, plural);
        (out != other).then_some(out)
    }

    /// `A v1 .. X ..` + `X v2 B` -> `A v2 B`, with v2 agreeing with A.
    fn chain_rule(&self, first: &[String], second: &[String]) -> Option<Vec<String>> {
        let v1 = self.first_verb(first)?;
        let v2 = self.first_verb(second)?;
        if v1 == 0 {
            return None;
        }
        let linker: Vec<String> = second[..v2]
            .iter()
            .filter(|w| !is_closed_class(w))
            .map(|w| self.lexicon.lemma(w))
            .collect();
        if linker.is_empty() {
            return None;
        }
        let object: Vec<String> = first[v1 + 1..].iter().map(|w| self.lexicon.lemma(w)).collect();
        if !linker.iter().all(|w| object.contains(w)) {
            return None;
        }
        let subject = &first[..v1];
        let head = subject.iter().rev().find(|w| !is_closed_class(w))?;
        let (_, lex_plural) = self.lexicon.base_form(head);
        let plural = lex_plural || (head.ends_with('s') && !head.ends_with("ss"));
        let verb = &second[v2];
        let base = verb_lemma(verb).map_or_else(|| third_person_base(verb), str::to_string);
        let mut out = subject.to_vec();
        out.push(if plural { base } else { third_person(&base) });
        out.extend_from_slice(&second[v2 + 1..]);
        Some(out)
    }

    fn conclude(&self, s1: &[String], s2: &[String]) -> Vec<Vec<String>> {
        let attempt = self
            .category_rule(s2, s1)
            .or_else(|| self.category_rule(s1, s2))
            .or_else(|| self.isa_rule(s2, s1))
            .or_else(|| self.isa_rule(s1, s2))
            .or_else(|| self.chain_rule(s1, s2))
            .or_else(|| self.chain_rule(s2, s1));
        attempt.into_iter().collect()
    }

    fn isa_links(&self, from: &[String], to: &[String]) -> Vec<Vec<String>> {
        let mut out = Vec::new();
        for p in from.iter().filter(|w| !is_closed_class(w)) {
            let (pb, _) = self.lexicon.base_form(p);
            let ancestors = self.lexicon.ancestors(&pb);
            for h in to.iter().filter(|w| !is_closed_class(w)) {
                let (hb, _) = self.lexicon.base_form(h);
                if ancestors.contains(&hb) {
                    let art = |w: &str| if starts_with_vowel(w) { "an" } else { "a" };
                    out.push(vec![
                        art(&pb).to_string(),
                        pb.clone(),
                        "is".into(),
                        art(&hb).to_string(),
                        hb,
                    ]);
                }
            }
        }
        out
    }

    fn content_lemmas(&self, tokens: &[String]) -> Vec<String> {
        tokens
            .iter()
            .filter(|w| !is_closed_class(w))
            .map(|w| self.lexicon.lemma(w))
            .collect()
    }

    /// Feature strings hashed into the mock embedding of `text`.
    pub fn embedding_features(&self, text: &str) -> Vec<String> {
        let tokens = toks(text);
        let content: Vec<&String> = tokens.iter().filter(|w| !is_closed_class(w)).collect();
        let words: Vec<&String> = if content.is_empty() {
            tokens.iter().collect()
        } else {
            content
        };
        let mut features = Vec::new();
        for w in words {
            let lemma = self.lexicon.lemma(w);
            if let Some(class) = self.lexicon.class_of(&lemma) {
                features.push(format!("class:{class}"));
            }
            features.push(lemma);
        }
        features
    }

    fn embed_one(&self, text: &str) -> Result<Vec<f64>> {
        let mut v = vec![0.0; MOCK_EMBED_DIM];
        for f in self.embedding_features(text) {
            let h = fnv1a(&f);
            let idx = (h % MOCK_EMBED_DIM as u64) as usize;
            v[idx] += if h >> 63 == 1 { -1.0 } else { 1.0 };
        }
        if !l2_normalize(&mut v) {
            return Err(Error::invalid(format!("cannot embed {text:?}")));
        }
        Ok(v)
    }

    fn judge_one(&self, premise: &str, hypothesis: &str) -> (f64, f64, f64) {
        let p = toks(premise);
        let h = toks(hypothesis);
        let negated = |t: &[String]| t.iter().any(|w| NEGATIONS.contains(&w.as_str()));
        let (p_neg, h_neg) = (negated(&p), negated(&h));
        let pc = self.content_lemmas(&p);
        let hc = self.content_lemmas(&h);
        let covers = |from: &[String], to: &[String]| {
            to.iter()
                .all(|t| from.iter().any(|f| self.lexicon.licenses(f, t)))
        };
        let forward = covers(&pc, &hc);
        let backward = covers(&hc, &pc);
        if p_neg == h_neg {
            // Negation flips monotonicity: under it, only specialization follows.
            let entails = if p_neg { backward } else { forward };
            if entails {
                P_ENTAIL
            } else {
                P_NEUTRAL
            }
        } else if forward || backward {
            P_CONTRADICT
        } else {
            P_NEUTRAL
        }
    }
}

impl Generator for MockOracle {
    fn generator_id(&self) -> String {
        "mock-v1".into()
    }

    fn generate_raw(
        &self,
        mode: GenerationMode,
        inputs: &[&str],
        _beam: usize,
        num_return: usize,
    ) -> Result<Vec<Candidate>> {
        if inputs.len() != mode.arity() {
            return Err(Error::invalid(format!("mode {mode} arity mismatch")));
        }
        let first = toks(inputs[0]);
        let second = inputs.get(1).map(|s| toks(s)).unwrap_or_default();
        let outputs = match mode {
            GenerationMode::Entail => self.entail(&first),
            GenerationMode::Monotonic => self.monotonic(&first),
            GenerationMode::Contradict => self.contradict(&first),
            GenerationMode::Neutral => self.neutral(&first),
            GenerationMode::Conclude => self.conclude(&first, &second),
            GenerationMode::Explain | GenerationMode::Proof => self.isa_links(&first, &second),
        };
        Ok(outputs
            .into_iter()
            .filter(|t| !t.is_empty())
            .take(num_return)
            .enumerate()
            .map(|(i, t)| Candidate {
                text: t.join(" "),
                score: -0.1 * (i as f64 + 1.0),
            })
            .collect())
    }
}

impl Embedder for MockOracle {
    fn embedder_id(&self) -> String {
        format!("mock-hash-{MOCK_EMBED_DIM}")
    }

    fn embed_raw(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>> {
        texts.iter().map(|t| self.embed_one(t)).collect()
    }
}

impl Judge for MockOracle {
    fn judge_raw(&self, pairs: &[(&str, &str)]) -> Result<Vec<(f64, f64, f64)>> {
        Ok(pairs.iter().map(|(p, h)| self.judge_one(p, h)).collect())
    }
}

impl Tagger for MockOracle {
    fn tag(&self, tokens: &[String]) -> Result<Vec<TokenTag>> {
        self.tagger.tag(tokens)
    }
}

impl Oracle for MockOracle {}
