//! Knowledge-base ingestion, an exact cosine index, and fact retrieval for
//! (premise, hypothesis) pairs.
//!
//! # KB files
//!
//! UTF-8, one fact per line. Blank lines and lines starting with `#` are
//! skipped. A line with exactly two tabs is read as `kb_id<TAB>source<TAB>text`;
//! any other line is a bare fact whose id is `<file stem>:<line number>` and
//! whose source is guessed from the file name (`omcs`, `generics`). Facts are
//! deduplicated on their normalized text, first occurrence wins.
//!
//! # Index cache
//!
//! Embedding the KB is the slow step, so [`build_index_cached`] stores the
//! embedding matrix next to the KB in a little-endian binary file:
//!
//! ```text
//! offset  size        field
//! 0       8           magic  "PSKBIDX\0"
//! 8       4           format version (u32, currently 1)
//! 12      32          SHA-256 of (embedder id, 0x00, then per file: u64 length + bytes)
//! 44      8           row count n (u64)
//! 52      4           dimension d (u32)
//! 56      8*n*d       row-major f64 embeddings, one row per deduplicated fact
//! ```
//!
//! A cache whose digest does not match the current files and embedder is
//! rebuilt; a cache with a bad magic or version is an error.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::oracle::{embed_texts, Embedder};
use crate::text::{cosine, normalized_key, PosTag, Sentence, Tagger};

/// Default number of facts retrieved per pair.
pub const DEFAULT_FACT_TOP_K: usize = 8;

/// Default centroid-cosine threshold for keyword clustering.
pub const DEFAULT_CLUSTER_THRESHOLD: f64 = 0.45;

const CACHE_MAGIC: &[u8; 8] = b"PSKBIDX\0";
const CACHE_VERSION: u32 = 1;
const EMBED_BATCH: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FactSource {
    #[serde(rename = "OMCS")]
    Omcs,
    #[serde(rename = "GenericsKB")]
    GenericsKb,
    #[serde(rename = "other")]
    Other,
}

impl FactSource {
    fn parse(s: &str) -> FactSource {
        match s.trim().to_ascii_lowercase().as_str() {
            "omcs" => FactSource::Omcs,
            "genericskb" | "generics" => FactSource::GenericsKb,
            _ => FactSource::Other,
        }
    }

    fn guess_from_path(path: &Path) -> FactSource {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().to_ascii_lowercase())
            .unwrap_or_default();
        if name.contains("omcs") {
            FactSource::Omcs
        } else if name.contains("generics") {
            FactSource::GenericsKb
        } else {
            FactSource::Other
        }
    }
}

/// A fact as stored in the index.
#[derive(Clone, Debug, PartialEq)]
pub struct KbEntry {
    pub kb_id: String,
    pub source: FactSource,
    pub text: Sentence,
}

/// A fact returned by a retrieval, with its score and 1-based rank.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fact {
    pub text: String,
    pub source: FactSource,
    pub kb_id: String,
    pub score: f64,
    pub rank: usize,
}

/// Reads and deduplicates the facts of one or more KB files.
pub fn load_facts(paths: &[PathBuf]) -> Result<Vec<KbEntry>> {
    let mut entries = Vec::new();
    let mut seen_text = HashSet::new();
    let mut seen_id = HashSet::new();
    for path in paths {
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "kb".into());
        let default_source = FactSource::guess_from_path(path);
        for (lineno, line) in content.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let (kb_id, source, text) = match fields.len() {
                1 => (format!("{stem}:{}", lineno + 1), default_source, fields[0]),
                3 => (fields[0].trim().to_string(), FactSource::parse(fields[1]), fields[2]),
                n => {
                    return Err(Error::Format {
                        path: path.clone(),
                        line: lineno + 1,
                        msg: format!("expected 1 or 3 tab-separated fields, found {n}"),
                    })
                }
            };
            let text = Sentence::new(text).map_err(|e| Error::Format {
                path: path.clone(),
                line: lineno + 1,
                msg: e.to_string(),
            })?;
            if !seen_text.insert(text.key()) {
                continue;
            }
            if !seen_id.insert(kb_id.clone()) {
                return Err(Error::DuplicateKbId(kb_id));
            }
            entries.push(KbEntry {
                kb_id,
                source,
                text,
            });
        }
    }
    Ok(entries)
}

/// Immutable exact-search index: one unit-norm embedding row per fact.
#[derive(Clone, Debug)]
pub struct KbIndex {
    entries: Vec<KbEntry>,
    embeddings: Vec<Vec<f64>>,
    dim: usize,
    embedder_id: String,
}

impl KbIndex {
    pub fn from_entries(entries: Vec<KbEntry>, embedder: &dyn Embedder) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyKb);
        }
        let mut embeddings = Vec::with_capacity(entries.len());
        for chunk in entries.chunks(EMBED_BATCH) {
            let texts: Vec<&str> = chunk.iter().map(|e| e.text.text()).collect();
            embeddings.extend(embed_texts(embedder, &texts)?);
        }
        let dim = embeddings[0].len();
        Ok(KbIndex {
            entries,
            embeddings,
            dim,
            embedder_id: embedder.embedder_id(),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn embedder_id(&self) -> &str {
        &self.embedder_id
    }

    pub fn entries(&self) -> &[KbEntry] {
        &self.entries
    }

    pub fn embedding(&self, row: usize) -> &[f64] {
        &self.embeddings[row]
    }

    pub fn entry_by_id(&self, kb_id: &str) -> Option<&KbEntry> {
        self.entries.iter().find(|e| e.kb_id == kb_id)
    }

    /// Score of every row against a unit query vector.
    fn scores(&self, query: &[f64]) -> Result<Vec<f64>> {
        self.embeddings.iter().map(|row| cosine(query, row)).collect()
    }

    /// Rows sorted by score descending, ties by kb_id ascending.
    fn ranked(&self, scores: &BTreeMap<usize, f64>, k: usize) -> Vec<Fact> {
        let mut rows: Vec<(usize, f64)> = scores.iter().map(|(r, s)| (*r, *s)).collect();
        rows.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then_with(|| self.entries[a.0].kb_id.cmp(&self.entries[b.0].kb_id))
        });
        rows.into_iter()
            .take(k)
            .enumerate()
            .map(|(i, (row, score))| {
                let e = &self.entries[row];
                Fact {
                    text: e.text.text().to_string(),
                    source: e.source,
                    kb_id: e.kb_id.clone(),
                    score,
                    rank: i + 1,
                }
            })
            .collect()
    }

    fn top_rows(&self, query_text: &str, k: usize, embedder: &dyn Embedder) -> Result<BTreeMap<usize, f64>> {
        let q = embed_texts(embedder, &[query_text])?.remove(0);
        let scores = self.scores(&q)?;
        let all: BTreeMap<usize, f64> = scores.into_iter().enumerate().collect();
        Ok(self
            .ranked(&all, k)
            .into_iter()
            .map(|f| (self.row_of(&f.kb_id), f.score))
            .collect())
    }

    fn row_of(&self, kb_id: &str) -> usize {
        self.entries
            .iter()
            .position(|e| e.kb_id == kb_id)
            .expect("kb_id from this index")
    }

    fn write_cache(&self, path: &Path, digest: &[u8; 32]) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        w.write_all(CACHE_MAGIC).map_err(io)?;
        w.write_all(&CACHE_VERSION.to_le_bytes()).map_err(io)?;
        w.write_all(digest).map_err(io)?;
        w.write_all(&(self.entries.len() as u64).to_le_bytes()).map_err(io)?;
        w.write_all(&(self.dim as u32).to_le_bytes()).map_err(io)?;
        for row in &self.embeddings {
            for x in row {
                w.write_all(&x.to_le_bytes()).map_err(io)?;
            }
        }
        w.flush().map_err(io)
    }
}

/// Reads the KB files and embeds every fact.
pub fn build_index(paths: &[PathBuf], embedder: &dyn Embedder) -> Result<KbIndex> {
    KbIndex::from_entries(load_facts(paths)?, embedder)
}

fn kb_digest(paths: &[PathBuf], embedder_id: &str) -> Result<[u8; 32]> {
    let mut h = Sha256::new();
    h.update(embedder_id.as_bytes());
    h.update([0u8]);
    for p in paths {
        let bytes = fs::read(p).map_err(|e| Error::io(p, e))?;
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(h.finalize().into())
}

fn read_cache(path: &Path, digest: &[u8; 32], entries: &[KbEntry]) -> Result<Option<Vec<Vec<f64>>>> {
    let mut f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut buf = Vec::new();
    f.read_to_end(&mut buf).map_err(|e| Error::io(path, e))?;
    if buf.len() < 56 || &buf[..8] != CACHE_MAGIC {
        return Err(Error::Cache(format!("{}: not an index cache", path.display())));
    }
    let version = u32::from_le_bytes(buf[8..12].try_into().unwrap());
    if version != CACHE_VERSION {
        return Err(Error::Cache(format!("unsupported cache version {version}")));
    }
    if &buf[12..44] != digest {
        return Ok(None);
    }
    let n = u64::from_le_bytes(buf[44..52].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(buf[52..56].try_into().unwrap()) as usize;
    if n != entries.len() || buf.len() != 56 + 8 * n * d || d == 0 {
        return Err(Error::Cache("cache size does not match the KB".into()));
    }
    let rows = buf[56..]
        .chunks_exact(8 * d)
        .map(|row| {
            row.chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                .collect()
        })
        .collect();
    Ok(Some(rows))
}

/// Like [`build_index`], reusing embeddings from `cache` when its digest
/// matches and rewriting it otherwise.
pub fn build_index_cached(paths: &[PathBuf], embedder: &dyn Embedder, cache: &Path) -> Result<KbIndex> {
    let entries = load_facts(paths)?;
    if entries.is_empty() {
        return Err(Error::EmptyKb);
    }
    let embedder_id = embedder.embedder_id();
    let digest = kb_digest(paths, &embedder_id)?;
    if cache.exists() {
        if let Some(embeddings) = read_cache(cache, &digest, &entries)? {
            log::debug!("loaded {} embeddings from {}", embeddings.len(), cache.display());
            let dim = embeddings[0].len();
            return Ok(KbIndex {
                entries,
                embeddings,
                dim,
                embedder_id,
            });
        }
        log::info!("index cache {} is stale, rebuilding", cache.display());
    }
    let index = KbIndex::from_entries(entries, embedder)?;
    index.write_cache(cache, &digest)?;
    Ok(index)
}

/// Disjoint groups of related keywords.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordGroups {
    pub groups: Vec<Vec<String>>,
}

fn push_unique(out: &mut Vec<String>, tok: &str) {
    if !out.iter().any(|t| t == tok) {
        out.push(tok.to_string());
    }
}

fn nouns(sentence: &Sentence, tagger: &dyn Tagger) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for t in tagger.tag(sentence.tokens())? {
        if t.tag == PosTag::Noun {
            push_unique(&mut out, &t.token);
        }
    }
    Ok(out)
}

/// Noun tokens of the premise and of the hypothesis, in order, deduplicated.
pub fn extract_keywords(
    premise: &Sentence,
    hypothesis: &Sentence,
    tagger: &dyn Tagger,
) -> Result<(Vec<String>, Vec<String>)> {
    Ok((nouns(premise, tagger)?, nouns(hypothesis, tagger)?))
}

/// Greedy agglomerative grouping: each token joins the first group whose
/// centroid has cosine >= `threshold` with it, else starts a new group.
pub fn cluster_keywords(tokens: &[String], embedder: &dyn Embedder, threshold: f64) -> Result<KeywordGroups> {
    let mut unique: Vec<String> = Vec::new();
    for t in tokens {
        push_unique(&mut unique, t);
    }
    if unique.is_empty() {
        return Ok(KeywordGroups { groups: Vec::new() });
    }
    let refs: Vec<&str> = unique.iter().map(String::as_str).collect();
    let vectors = embed_texts(embedder, &refs)?;
    let mut groups: Vec<Vec<String>> = Vec::new();
    let mut centroids: Vec<Vec<f64>> = Vec::new();
    for (tok, v) in unique.into_iter().zip(vectors) {
        let mut joined = None;
        for (g, c) in centroids.iter().enumerate() {
            // A centroid can cancel to zero; such a group accepts nothing.
            if cosine(c, &v).map_or(false, |s| s >= threshold) {
                joined = Some(g);
                break;
            }
        }
        match joined {
            Some(g) => {
                groups[g].push(tok);
                centroids[g].iter_mut().zip(&v).for_each(|(c, x)| *c += x);
            }
            None => {
                groups.push(vec![tok]);
                centroids.push(v);
            }
        }
    }
    Ok(KeywordGroups { groups })
}

/// Top-`k` facts by cosine similarity to `query_text`, ranked 1..k.
pub fn retrieve(index: &KbIndex, query_text: &str, k: usize, embedder: &dyn Embedder) -> Result<Vec<Fact>> {
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    if index.is_empty() {
        return Err(Error::EmptyKb);
    }
    let rows = index.top_rows(query_text, k, embedder)?;
    Ok(index.ranked(&rows, k))
}

/// The query strings used by [`retrieve_for_pair`]: the joined keyword list
/// first, then one string per keyword group. Falls back to the premise text
/// when neither sentence has a noun.
pub fn pair_queries(
    premise: &Sentence,
    hypothesis: &Sentence,
    embedder: &dyn Embedder,
    tagger: &dyn Tagger,
    threshold: f64,
) -> Result<Vec<String>> {
    let (np, nh) = extract_keywords(premise, hypothesis, tagger)?;
    let mut keywords = Vec::new();
    for t in np.iter().chain(&nh) {
        push_unique(&mut keywords, t);
    }
    if keywords.is_empty() {
        return Ok(vec![premise.text().to_string()]);
    }
    let mut queries = vec![keywords.join(" ")];
    let groups = cluster_keywords(&keywords, embedder, threshold)?;
    queries.extend(groups.groups.iter().map(|g| g.join(" ")));
    Ok(queries)
}

/// Keyword and clustered-keyword retrieval, merged by each fact's best score
/// and re-ranked.
pub fn retrieve_for_pair(
    index: &KbIndex,
    premise: &Sentence,
    hypothesis: &Sentence,
    k: usize,
    embedder: &dyn Embedder,
    tagger: &dyn Tagger,
    threshold: f64,
) -> Result<Vec<Fact>> {
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    if index.is_empty() {
        return Err(Error::EmptyKb);
    }
    let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
    for q in pair_queries(premise, hypothesis, embedder, tagger, threshold)? {
        for (row, score) in index.top_rows(&q, k, embedder)? {
            let slot = merged.entry(row).or_insert(score);
            if score > *slot {
                *slot = score;
            }
        }
    }
    Ok(index.ranked(&merged, k))
}

/// Whether two texts are the same fact under KB deduplication.
pub fn same_fact(a: &str, b: &str) -> bool {
    normalized_key(a) == normalized_key(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::MockOracle;
    use crate::text::HeuristicTagger;

    fn kb_file(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    fn s(t: &str) -> Sentence {
        Sentence::new(t).unwrap()
    }

    #[test]
    fn load_counts_and_dedups() {
        let dir = tempfile::tempdir().unwrap();
        let a = kb_file(dir.path(), "omcs.txt", "# header\na dog is an animal\n\nsnow is cold\nA dog is an animal.\n");
        let facts = load_facts(&[a.clone()]).unwrap();
        assert_eq!(facts.len(), 2);
        assert_eq!(facts[0].kb_id, "omcs:2");
        assert_eq!(facts[0].source, FactSource::Omcs);

        let b = kb_file(dir.path(), "extra.tsv", "g1\tGenericsKB\tsnow is cold\ng2\tgenericskb\tice is slippery\n");
        let facts = load_facts(&[a, b]).unwrap();
        assert_eq!(facts.len(), 3);
        assert_eq!(facts[1].source, FactSource::Omcs);
        assert_eq!(facts[2].kb_id, "g2");
        assert_eq!(facts[2].source, FactSource::GenericsKb);
    }

    #[test]
    fn load_errors() {
        let dir = tempfile::tempdir().unwrap();
        let bad = kb_file(dir.path(), "bad.tsv", "x\ty\n");
        assert!(matches!(load_facts(&[bad]), Err(Error::Format { line: 1, .. })));
        let dup = kb_file(dir.path(), "dup.tsv", "f1\tOMCS\ta dog barks\nf1\tOMCS\ta cat meows\n");
        assert!(matches!(load_facts(&[dup]), Err(Error::DuplicateKbId(_))));
        assert!(matches!(load_facts(&[dir.path().join("missing.txt")]), Err(Error::Io { .. })));
        let empty = kb_file(dir.path(), "empty.txt", "# nothing\n\n");
        let m = MockOracle::default();
        assert!(matches!(build_index(&[empty], &m), Err(Error::EmptyKb)));
    }

    #[test]
    fn retrieve_identity_and_exhaustive() {
        let dir = tempfile::tempdir().unwrap();
        let p = kb_file(dir.path(), "kb.txt", "a dog is an animal\nsnow is cold\na guitar is an instrument\n");
        let m = MockOracle::default();
        let idx = build_index(&[p], &m).unwrap();
        assert_eq!(idx.len(), 3);
        let top = retrieve(&idx, "a guitar is an instrument", 1, &m).unwrap();
        assert_eq!(top[0].text, "a guitar is an instrument");
        assert_eq!(top[0].rank, 1);
        let all = retrieve(&idx, "dog", 10, &m).unwrap();
        assert_eq!(all.len(), 3);
        assert_eq!(all.iter().map(|f| f.rank).collect::<Vec<_>>(), [1, 2, 3]);
        assert!(all.windows(2).all(|w| w[0].score >= w[1].score));
        assert!(retrieve(&idx, "dog", 0, &m).is_err());
    }

    #[test]
    fn keywords_and_clusters() {
        let t = HeuristicTagger::new();
        let (np, nh) = extract_keywords(&s("a dog chases a ball"), &s("an animal plays"), &t).unwrap();
        assert_eq!(np, ["dog", "ball"]);
        assert_eq!(nh, ["animal"]);
        let (np, _) = extract_keywords(&s("a dog sees another dog"), &s("it runs"), &t).unwrap();
        assert_eq!(np, ["dog"]);
        let (np, _) = extract_keywords(&s("it is very green"), &s("it runs"), &t).unwrap();
        assert!(np.is_empty());

        let m = MockOracle::default();
        let one = cluster_keywords(&["dog".into()], &m, 0.45).unwrap();
        assert_eq!(one.groups, vec![vec!["dog".to_string()]]);
        let words: Vec<String> = ["dog", "animal", "snow", "cold", "frisbee", "toy", "plastic"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let g = cluster_keywords(&words, &m, 0.45).unwrap();
        assert_eq!(
            g.groups,
            vec![
                vec!["dog".to_string(), "animal".into()],
                vec!["snow".into(), "cold".into()],
                vec!["frisbee".into(), "toy".into(), "plastic".into()],
            ]
        );
        let flat = cluster_keywords(&["zebra".into(), "kettle".into(), "moon".into()], &m, 0.45).unwrap();
        assert_eq!(flat.groups.len(), 3);
    }

    #[test]
    fn cache_round_trip_and_staleness() {
        let dir = tempfile::tempdir().unwrap();
        let p = kb_file(dir.path(), "kb.txt", "a dog is an animal\nsnow is cold\n");
        let cache = dir.path().join("kb.idx");
        let m = MockOracle::default();
        let fresh = build_index_cached(&[p.clone()], &m, &cache).unwrap();
        assert!(cache.exists());
        let bytes = fs::read(&cache).unwrap();
        assert_eq!(&bytes[..8], CACHE_MAGIC);
        assert_eq!(bytes.len(), 56 + 8 * 2 * fresh.dim());
        let reloaded = build_index_cached(&[p.clone()], &m, &cache).unwrap();
        assert_eq!(reloaded.embeddings, fresh.embeddings);

        kb_file(dir.path(), "kb.txt", "a dog is an animal\nsnow is cold\nice is cold\n");
        let rebuilt = build_index_cached(&[p], &m, &cache).unwrap();
        assert_eq!(rebuilt.len(), 3);

        fs::write(&cache, b"garbage").unwrap();
        let p2 = dir.path().join("kb.txt");
        assert!(matches!(build_index_cached(&[p2], &m, &cache), Err(Error::Cache(_))));
    }

    #[test]
    fn fallback_query_is_the_premise() {
        let m = MockOracle::default();
        let t = HeuristicTagger::new();
        let q = pair_queries(&s("it is green"), &s("it runs"), &m, &t, 0.45).unwrap();
        assert_eq!(q, ["it is green"]);
        let q = pair_queries(&s("a dog runs in the snow"), &s("an animal runs"), &m, &t, 0.45).unwrap();
        assert_eq!(q, ["dog snow animal", "dog animal", "snow"]);
    }
}
