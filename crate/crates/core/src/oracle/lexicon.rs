use std::collections::{BTreeMap, BTreeSet};

use crate::text::{is_closed_class, verb_lemma};

const HYPERNYMS: &[(&str, &str)] = &[
    ("puppy", "dog"),
    ("dog", "animal"),
    ("kitten", "cat"),
    ("cat", "animal"),
    ("horse", "animal"),
    ("bird", "animal"),
    ("cow", "animal"),
    ("animal", "creature"),
    ("guitar", "instrument"),
    ("violin", "instrument"),
    ("piano", "instrument"),
    ("drum", "instrument"),
    ("instrument", "object"),
    ("frisbee", "toy"),
    ("ball", "toy"),
    ("doll", "toy"),
    ("toy", "object"),
    ("man", "person"),
    ("woman", "person"),
    ("boy", "child"),
    ("girl", "child"),
    ("child", "person"),
    ("guitarist", "musician"),
    ("musician", "person"),
    ("cop", "officer"),
    ("officer", "person"),
    ("swimmer", "athlete"),
    ("athlete", "person"),
    ("skateboarder", "person"),
    ("cruiser", "boat"),
    ("ship", "boat"),
    ("sailboat", "boat"),
    ("boat", "vehicle"),
    ("car", "vehicle"),
    ("truck", "vehicle"),
    ("bicycle", "vehicle"),
    ("motorbike", "vehicle"),
    ("apple", "fruit"),
    ("banana", "fruit"),
    ("fruit", "food"),
    ("bread", "food"),
    ("pizza", "food"),
    ("shirt", "clothing"),
    ("jacket", "clothing"),
    ("hat", "clothing"),
    ("robe", "clothing"),
    ("sofa", "furniture"),
    ("couch", "furniture"),
    ("chair", "furniture"),
    ("table", "furniture"),
    ("ocean", "water"),
    ("lake", "water"),
    ("river", "water"),
];

const SYNONYMS: &[(&str, &str)] = &[
    ("sofa", "couch"),
    ("big", "large"),
    ("small", "little"),
    ("happy", "glad"),
    ("fast", "quick"),
    ("runs", "sprints"),
    ("running", "sprinting"),
    ("jumps", "leaps"),
    ("jumping", "leaping"),
    ("smiles", "grins"),
    ("smiling", "grinning"),
    ("walks", "strolls"),
    ("walking", "strolling"),
    ("stone", "rock"),
    ("road", "street"),
];

const CLASSES: &[(&str, &str)] = &[
    ("snow", "winter"),
    ("ice", "winter"),
    ("cold", "winter"),
    ("plastic", "object"),
    ("grass", "nature"),
    ("tree", "nature"),
    ("park", "nature"),
];

const NEUTRAL_ADDITIONS: &[&str] = &["today", "for fun", "with a friend"];

const IRREGULAR_PLURALS: &[(&str, &str)] = &[
    ("man", "men"),
    ("woman", "women"),
    ("child", "children"),
    ("person", "people"),
    ("mouse", "mice"),
];

/// Hand-authored word relations backing the mock oracle.
///
/// Hypernym edges drive `entail` rewrites and judge licensing, synonyms drive
/// `monotonic` rewrites, and class labels group related words for the mock
/// embedder. A word's class is its explicit label, else the root of its
/// hypernym chain.
#[derive(Clone, Debug, Default)]
pub struct Lexicon {
    hypernyms: BTreeMap<String, String>,
    synonyms: BTreeMap<String, BTreeSet<String>>,
    classes: BTreeMap<String, String>,
    neutral_additions: Vec<String>,
}

impl Lexicon {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn builtin() -> Self {
        let mut lex = Self::empty();
        for (child, parent) in HYPERNYMS {
            lex = lex.with_hypernym(child, parent);
        }
        for (a, b) in SYNONYMS {
            lex = lex.with_synonym(a, b);
        }
        for (w, c) in CLASSES {
            lex = lex.with_class(w, c);
        }
        for a in NEUTRAL_ADDITIONS {
            lex = lex.with_neutral_addition(a);
        }
        lex
    }

    pub fn with_hypernym(mut self, child: &str, parent: &str) -> Self {
        self.hypernyms.insert(child.into(), parent.into());
        self
    }

    pub fn with_synonym(mut self, a: &str, b: &str) -> Self {
        self.synonyms.entry(a.into()).or_default().insert(b.into());
        self.synonyms.entry(b.into()).or_default().insert(a.into());
        self
    }

    pub fn with_class(mut self, word: &str, class: &str) -> Self {
        self.classes.insert(word.into(), class.into());
        self
    }

    pub fn with_neutral_addition(mut self, phrase: &str) -> Self {
        self.neutral_additions.push(phrase.into());
        self
    }

    pub fn neutral_additions(&self) -> &[String] {
        &self.neutral_additions
    }

    pub fn parent(&self, base: &str) -> Option<&str> {
        self.hypernyms.get(base).map(String::as_str)
    }

    /// Hypernym chain above `base`, nearest first.
    pub fn ancestors(&self, base: &str) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut cur = base;
        while let Some(p) = self.parent(cur) {
            if p == base || out.iter().any(|a| a == p) {
                break;
            }
            out.push(p.to_string());
            cur = p;
        }
        out
    }

    pub fn synonyms_of(&self, base: &str) -> impl Iterator<Item = &str> {
        self.synonyms
            .get(base)
            .into_iter()
            .flat_map(|s| s.iter().map(String::as_str))
    }

    fn in_taxonomy(&self, base: &str) -> bool {
        self.hypernyms.contains_key(base) || self.hypernyms.values().any(|p| p == base)
    }

    pub fn is_known(&self, base: &str) -> bool {
        self.in_taxonomy(base) || self.synonyms.contains_key(base) || self.classes.contains_key(base)
    }

    pub fn class_of(&self, base: &str) -> Option<String> {
        if let Some(c) = self.classes.get(base) {
            return Some(c.clone());
        }
        if !self.in_taxonomy(base) {
            return None;
        }
        Some(self.ancestors(base).pop().unwrap_or_else(|| base.to_string()))
    }

    /// Splits a surface token into (base form, is_plural) for known nouns.
    pub fn base_form(&self, token: &str) -> (String, bool) {
        if self.is_known(token) {
            return (token.to_string(), false);
        }
        if let Some((sing, _)) = IRREGULAR_PLURALS.iter().find(|(_, p)| *p == token) {
            return (sing.to_string(), true);
        }
        let mut candidates = Vec::new();
        if let Some(s) = token.strip_suffix("ies") {
            candidates.push(format!("{s}y"));
        }
        if let Some(s) = token.strip_suffix("es") {
            candidates.push(s.to_string());
        }
        if let Some(s) = token.strip_suffix('s') {
            candidates.push(s.to_string());
        }
        match candidates.into_iter().find(|c| self.is_known(c)) {
            Some(c) => (c, true),
            None => (token.to_string(), false),
        }
    }

    pub fn inflect(&self, base: &str, plural: bool) -> String {
        if !plural {
            return base.to_string();
        }
        if let Some((_, p)) = IRREGULAR_PLURALS.iter().find(|(s, _)| *s == base) {
            return p.to_string();
        }
        if ["s", "x", "ch", "sh"].iter().any(|e| base.ends_with(e)) {
            return format!("{base}es");
        }
        if let Some(stem) = base.strip_suffix('y') {
            if !stem.ends_with(['a', 'e', 'i', 'o', 'u']) {
                return format!("{stem}ies");
            }
        }
        format!("{base}s")
    }

    /// Canonical form used for matching: lexicon base for known nouns, verb
    /// lemma for known verbs, otherwise the token itself.
    pub fn lemma(&self, token: &str) -> String {
        let (base, plural) = self.base_form(token);
        if plural || self.in_taxonomy(&base) || self.classes.contains_key(&base) {
            return base;
        }
        verb_lemma(token).map_or(base, str::to_string)
    }

    /// Whether a hypothesis token is supported by a premise token: same
    /// lemma, a hypernym of it, or a synonym.
    pub fn licenses(&self, premise_token: &str, hypothesis_token: &str) -> bool {
        let p = self.lemma(premise_token);
        let h = self.lemma(hypothesis_token);
        p == h
            || self.ancestors(&p).iter().any(|a| *a == h)
            || self.synonyms_of(&p).any(|s| s == h)
            || self.synonyms_of(premise_token).any(|s| s == hypothesis_token)
    }

    /// Every content word the lexicon mentions, sorted.
    pub fn vocabulary(&self) -> Vec<String> {
        let mut words = BTreeSet::new();
        for (c, p) in &self.hypernyms {
            words.insert(c.clone());
            words.insert(p.clone());
        }
        for (w, syns) in &self.synonyms {
            words.insert(w.clone());
            words.extend(syns.iter().cloned());
        }
        words.extend(self.classes.keys().cloned());
        words
            .into_iter()
            .filter(|w| !is_closed_class(w) && w.chars().all(|c| c.is_alphanumeric()))
            .collect()
    }
}
