//! Deterministic text primitives shared by every other module.
//!
//! Tokenization lowercases the input and keeps maximal runs of alphanumeric
//! characters. Everything else (punctuation, hyphens, apostrophes) separates
//! tokens and is then dropped, so `"A black-haired man"` becomes
//! `["a", "black", "haired", "man"]`. Digits are kept.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Smoothing value substituted for a zero n-gram match count in [`bleu4`].
pub const BLEU_EPSILON: f64 = 1e-9;

const MAX_NGRAM: usize = 4;

/// Function words the bundled tagger treats as closed-class. The mock
/// embedder and judge also ignore them.
pub const CLOSED_CLASS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "some", "any", "every", "each", "all",
    "no", "not", "never", "of", "in", "on", "at", "by", "for", "with", "from", "to", "into",
    "onto", "over", "under", "above", "below", "behind", "beside", "near", "between", "through",
    "across", "along", "around", "against", "up", "down", "out", "off", "about", "after",
    "before", "during", "without", "within", "and", "or", "but", "nor", "so", "yet", "if",
    "then", "than", "because", "while", "as", "is", "are", "was", "were", "be", "been", "being",
    "am", "do", "does", "did", "has", "have", "had", "will", "would", "can", "could", "shall",
    "should", "may", "might", "must", "it", "its", "he", "she", "they", "them", "his", "her",
    "hers", "their", "we", "us", "our", "you", "your", "i", "me", "my", "him", "himself",
    "herself", "itself", "themselves", "there", "here", "who", "whom", "whose", "which", "what",
    "where", "when", "why", "how", "very", "too", "also", "just", "only", "one", "two", "three",
    "four", "five", "six", "many", "much", "more", "most", "few", "several", "other", "another",
    "such", "own", "same", "both", "either", "neither", "next", "someone", "something",
    "somebody", "anyone", "everyone", "nobody", "nothing",
];

pub fn is_closed_class(token: &str) -> bool {
    CLOSED_CLASS.contains(&token)
}

/// Splits `text` into lowercase alphanumeric tokens.
///
/// Fails only when `text` is empty or whitespace. Punctuation-only text
/// yields an empty list.
pub fn normalize_tokens(text: &str) -> Result<Vec<String>> {
    if text.trim().is_empty() {
        return Err(Error::invalid("empty text"));
    }
    Ok(text
        .split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(str::to_lowercase)
        .collect())
}

/// Canonical comparison key for a piece of text: its tokens joined by spaces.
pub fn normalized_key(text: &str) -> String {
    normalize_tokens(text).map(|t| t.join(" ")).unwrap_or_default()
}

/// A non-empty natural-language sentence with its normalized tokens.
#[derive(Clone, PartialEq)]
pub struct Sentence {
    text: String,
    tokens: Vec<String>,
    embedding: Option<Vec<f64>>,
}

impl Sentence {
    pub fn new(text: impl Into<String>) -> Result<Self> {
        let text: String = text.into();
        let tokens = normalize_tokens(&text)?;
        if tokens.is_empty() {
            return Err(Error::invalid(format!("no word tokens in {text:?}")));
        }
        Ok(Sentence {
            text: text.trim().to_string(),
            tokens,
            embedding: None,
        })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Tokens joined by single spaces; two sentences are "the same" when
    /// their keys are equal.
    pub fn key(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn embedding(&self) -> Option<&[f64]> {
        self.embedding.as_deref()
    }

    /// Attaches an embedding, which must already be unit-norm.
    pub fn with_embedding(mut self, v: Vec<f64>) -> Result<Self> {
        let norm = l2_norm(&v);
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::invalid(format!("embedding norm {norm} is not 1")));
        }
        self.embedding = Some(v);
        Ok(self)
    }
}

impl fmt::Debug for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sentence({:?})", self.text)
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl Serialize for Sentence {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.text)
    }
}

impl<'de> Deserialize<'de> for Sentence {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Sentence::new(text).map_err(serde::de::Error::custom)
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Sentence-level cumulative BLEU-4 of `candidate` against `reference`.
///
/// Uniform weights over orders `1..=min(4, |candidate|)`, clipped n-gram
/// precision, zero match counts replaced by [`BLEU_EPSILON`], and the usual
/// brevity penalty. Not symmetric.
pub fn bleu4(candidate: &[String], reference: &[String]) -> Result<f64> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(Error::invalid("bleu4 on an empty token list"));
    }
    let orders = candidate.len().min(MAX_NGRAM);
    let mut log_sum = 0.0;
    for n in 1..=orders {
        let cand = ngram_counts(candidate, n);
        let refs = ngram_counts(reference, n);
        let total = candidate.len() + 1 - n;
        let matched: usize = cand
            .iter()
            .map(|(g, &c)| c.min(refs.get(g).copied().unwrap_or(0)))
            .sum();
        let numerator = if matched == 0 {
            BLEU_EPSILON
        } else {
            matched as f64
        };
        log_sum += (numerator / total as f64).ln();
    }
    let c = candidate.len() as f64;
    let r = reference.len() as f64;
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    Ok(bp * (log_sum / orders as f64).exp())
}

/// |A ∩ B| / |A ∪ B| over the token sets.
pub fn jaccard(a: &[String], b: &[String]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("jaccard on an empty token list"));
    }
    let sa: HashSet<&str> = a.iter().map(String::as_str).collect();
    let sb: HashSet<&str> = b.iter().map(String::as_str).collect();
    let inter = sa.intersection(&sb).count();
    let union = sa.union(&sb).count();
    Ok(inter as f64 / union as f64)
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Scales `v` to unit length in place. Returns false for the zero vector.
pub fn l2_normalize(v: &mut [f64]) -> bool {
    let norm = l2_norm(v);
    if norm == 0.0 || !norm.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    true
}

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    let (nu, nv) = (l2_norm(u), l2_norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::invalid("cosine of a zero vector"));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PosTag {
    Noun,
    Verb,
    Adjective,
    Other,
}

impl PosTag {
    pub fn is_keyword(self) -> bool {
        !matches!(self, PosTag::Other)
    }

    pub fn parse(s: &str) -> Option<PosTag> {
        match s {
            "noun" => Some(PosTag::Noun),
            "verb" => Some(PosTag::Verb),
            "adjective" => Some(PosTag::Adjective),
            "other" => Some(PosTag::Other),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenTag {
    pub token: String,
    pub tag: PosTag,
}

/// Part-of-speech tagger over normalized tokens.
pub trait Tagger: Send + Sync {
    fn tag(&self, tokens: &[String]) -> Result<Vec<TokenTag>>;
}

/// Number of nouns, verbs and adjectives in `sentence`.
pub fn count_keywords(sentence: &Sentence, tagger: &dyn Tagger) -> Result<usize> {
    Ok(tagger
        .tag(sentence.tokens())?
        .iter()
        .filter(|t| t.tag.is_keyword())
        .count())
}

const VERBS: &[&str] = &[
    "run", "play", "chase", "jump", "sit", "stand", "walk", "ride", "eat", "drink", "hold",
    "wear", "look", "watch", "climb", "swim", "throw", "catch", "kick", "carry", "read", "write",
    "sing", "dance", "talk", "smile", "laugh", "cook", "paint", "drive", "fly", "sleep", "rest",
    "wait", "work", "push", "pull", "block", "produce", "make", "take", "give", "get", "go",
    "come", "see", "use", "sell", "buy", "perform", "lie", "lean", "pose", "celebrate", "propel",
    "fill", "cut", "build", "clean", "wash", "fix", "grab", "hug", "kiss", "lift", "open",
    "close", "leave", "enter", "cross", "race", "skate", "ski", "surf", "sail", "shop",
    "help", "teach", "learn", "sprint", "leap", "grin", "stroll", "entertain", "marry", "put",
    "spit", "keep", "appear", "move", "live", "love", "like", "need", "want",
    "feed", "bark", "meow", "stare", "point", "wave", "shout", "cry", "travel", "visit", "enjoy",
    "conclude", "contain", "cause", "require", "float", "roll", "bounce", "splash", "dig",
];

const IRREGULAR_VERBS: &[(&str, &str)] = &[
    ("ran", "run"), ("sat", "sit"), ("stood", "stand"), ("ate", "eat"), ("drank", "drink"),
    ("held", "hold"), ("wore", "wear"), ("threw", "throw"), ("caught", "catch"),
    ("rode", "ride"), ("swam", "swim"), ("sang", "sing"), ("flew", "fly"), ("slept", "sleep"),
    ("made", "make"), ("took", "take"), ("gave", "give"), ("got", "get"), ("went", "go"),
    ("came", "come"), ("saw", "see"), ("sold", "sell"), ("bought", "buy"), ("wrote", "write"),
    ("lay", "lie"), ("built", "build"), ("left", "leave"), ("kept", "keep"), ("seen", "see"),
    ("done", "do"), ("gone", "go"), ("taken", "take"), ("given", "give"), ("eaten", "eat"),
    ("written", "write"), ("ridden", "ride"), ("thrown", "throw"), ("worn", "wear"),
];

const ADJECTIVES: &[&str] = &[
    "big", "small", "large", "little", "tall", "short", "young", "old", "happy", "sad", "glad",
    "red", "blue", "green", "black", "white", "brown", "yellow", "orange", "pink", "purple",
    "gray", "grey", "dark", "bright", "cold", "hot", "warm", "wet", "dry", "long", "new", "good",
    "bad", "beautiful", "pretty", "cute", "fast", "slow", "loud", "quiet", "rough", "smooth",
    "soft", "hard", "heavy", "light", "empty", "full", "busy", "crowded", "sunny", "snowy",
    "rainy", "wooden", "golden", "female", "male", "professional", "middle", "aged", "haired",
    "huge", "tiny", "quick", "calm", "angry", "tired", "hungry", "shiny", "fluffy", "furry",
    "outdoor", "indoor", "outside", "inside",
];

const NOUN_EXCEPTIONS: &[&str] = &[
    "thing", "ring", "king", "building", "morning", "evening", "ceiling", "family", "string",
    "spring", "wing", "swing", "painting", "clothing", "fly", "bed", "sled", "shed", "sled",
    "people", "children", "men", "women",
];

const ADJ_SUFFIXES: &[&str] = &["ous", "ful", "ive", "less", "able", "ible", "ish"];

/// Context-free tagger: closed-class stoplist, small verb and adjective
/// lexicons with inflection stripping, then suffix rules; anything else
/// alphabetic is a noun.
#[derive(Clone, Debug, Default)]
pub struct HeuristicTagger;

impl HeuristicTagger {
    pub fn new() -> Self {
        HeuristicTagger
    }

    pub fn tag_token(&self, token: &str) -> PosTag {
        if is_closed_class(token) || token.chars().any(|c| c.is_ascii_digit()) {
            return PosTag::Other;
        }
        if NOUN_EXCEPTIONS.contains(&token) {
            return PosTag::Noun;
        }
        if ADJECTIVES.contains(&token) {
            return PosTag::Adjective;
        }
        if is_verb_form(token) {
            return PosTag::Verb;
        }
        if token.len() > 4 && token.ends_with("ly") {
            return PosTag::Other;
        }
        if ADJ_SUFFIXES
            .iter()
            .any(|s| token.len() > s.len() + 2 && token.ends_with(s))
        {
            return PosTag::Adjective;
        }
        if token.ends_with("ing") && token.len() > 5 {
            return PosTag::Verb;
        }
        PosTag::Noun
    }
}

/// Candidate base forms for an inflected verb token.
pub(crate) fn verb_stems(token: &str) -> Vec<String> {
    let mut stems = vec![token.to_string()];
    let mut push = |s: &str| {
        if !s.is_empty() {
            stems.push(s.to_string());
        }
    };
    if let Some(s) = token.strip_suffix("ing") {
        push(s);
        push(&format!("{s}e"));
        if s.len() > 2 && s.as_bytes()[s.len() - 1] == s.as_bytes()[s.len() - 2] {
            push(&s[..s.len() - 1]);
        }
    }
    if let Some(s) = token.strip_suffix("ed") {
        push(s);
        push(&format!("{s}e"));
        if s.len() > 2 && s.as_bytes()[s.len() - 1] == s.as_bytes()[s.len() - 2] {
            push(&s[..s.len() - 1]);
        }
    }
    if let Some(s) = token.strip_suffix("ies") {
        push(&format!("{s}y"));
    }
    if let Some(s) = token.strip_suffix("es") {
        push(s);
    }
    if let Some(s) = token.strip_suffix('s') {
        push(s);
    }
    stems
}

/// Base form of a verb token known to the bundled lexicon, e.g.
/// `"chasing"` to `"chase"`.
pub fn verb_lemma(token: &str) -> Option<&'static str> {
    if let Some((_, base)) = IRREGULAR_VERBS.iter().find(|(form, _)| *form == token) {
        return Some(base);
    }
    verb_stems(token)
        .iter()
        .find_map(|s| VERBS.iter().find(|v| **v == s.as_str()).copied())
}

fn is_verb_form(token: &str) -> bool {
    verb_lemma(token).is_some()
}

impl Tagger for HeuristicTagger {
    fn tag(&self, tokens: &[String]) -> Result<Vec<TokenTag>> {
        Ok(tokens
            .iter()
            .map(|t| TokenTag {
                token: t.clone(),
                tag: self.tag_token(t),
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        normalize_tokens(s).unwrap()
    }

    #[test]
    fn tokenization_examples() {
        assert_eq!(toks("A man plays."), ["a", "man", "plays"]);
        assert_eq!(toks("  Dog!  "), ["dog"]);
        assert_eq!(toks("A black-haired man"), ["a", "black", "haired", "man"]);
        assert_eq!(toks("3 dogs, 2 cats"), ["3", "dogs", "2", "cats"]);
    }

    #[test]
    fn tokenization_rejects_blank() {
        assert!(normalize_tokens("").is_err());
        assert!(normalize_tokens(" \t\n").is_err());
        assert!(normalize_tokens("?!").unwrap().is_empty());
    }

    #[test]
    fn sentence_needs_a_word() {
        assert!(Sentence::new("...").is_err());
        let s = Sentence::new(" The dog. ").unwrap();
        assert_eq!(s.text(), "The dog.");
        assert_eq!(s.key(), "the dog");
    }

    #[test]
    fn sentence_embedding_must_be_unit() {
        let s = Sentence::new("dog").unwrap();
        assert!(s.clone().with_embedding(vec![0.6, 0.8]).is_ok());
        assert!(s.with_embedding(vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn bleu_identity_and_zero_overlap() {
        let x = toks("a man plays a red guitar");
        assert!((bleu4(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        let short = toks("dog");
        assert!((bleu4(&short, &short).unwrap() - 1.0).abs() < 1e-12);
        let y = toks("the cat sleeps on sofas today");
        assert!(bleu4(&y, &x).unwrap() <= BLEU_EPSILON);
        assert!(bleu4(&[], &x).is_err());
    }

    #[test]
    fn bleu_brevity_penalty_applies_to_short_candidates() {
        let r = toks("a b c d e f");
        let c = toks("a b c d");
        let expected = (1.0f64 - 6.0 / 4.0).exp();
        assert!((bleu4(&c, &r).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn jaccard_examples() {
        let abc = toks("a b c");
        assert_eq!(jaccard(&abc, &abc).unwrap(), 1.0);
        assert_eq!(jaccard(&abc, &toks("x y")).unwrap(), 0.0);
        assert_eq!(jaccard(&abc, &toks("b c d")).unwrap(), 0.5);
        assert!(jaccard(&abc, &[]).is_err());
    }

    #[test]
    fn cosine_examples() {
        assert!((cosine(&[0.6, 0.8], &[0.6, 0.8]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine(&[0.6, 0.8], &[0.8, 0.6]).unwrap() - 0.96).abs() < 1e-12);
        assert!(cosine(&[1.0], &[1.0, 0.0]).is_err());
        assert!(cosine(&[0.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn keyword_counts() {
        let t = HeuristicTagger::new();
        assert_eq!(count_keywords(&Sentence::new("a the of").unwrap(), &t).unwrap(), 0);
        assert_eq!(count_keywords(&Sentence::new("dog runs").unwrap(), &t).unwrap(), 2);
        let tags = t.tag(&toks("a dog chases a ball")).unwrap();
        let nouns: Vec<_> = tags
            .iter()
            .filter(|t| t.tag == PosTag::Noun)
            .map(|t| t.token.as_str())
            .collect();
        assert_eq!(nouns, ["dog", "ball"]);
    }

    #[test]
    fn tagger_handles_inflections() {
        let t = HeuristicTagger::new();
        for v in ["runs", "running", "chased", "watches", "playing", "ran"] {
            assert_eq!(t.tag_token(v), PosTag::Verb, "{v}");
        }
        for n in ["dogs", "animal", "guitar", "building", "snow"] {
            assert_eq!(t.tag_token(n), PosTag::Noun, "{n}");
        }
        for a in ["green", "beautiful", "quickly"] {
            assert_ne!(t.tag_token(a), PosTag::Noun, "{a}");
        }
    }
}
