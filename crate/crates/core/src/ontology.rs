//! Terminology loading, preprocessing, class-probability maps, synsets,
//! and coverage-ranked partitioning.
//!
//! Terms are canonicalized token-wise: each token is lowercased unless it
//! looks like an abbreviation (all-caps of length <= 5, or containing
//! internal periods), in which case it is kept verbatim. Sentence tokens
//! are folded with the same rule at match time, so dictionaries and text
//! meet in one canonical space.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use crate::corpus::{Corpus, TaskSchema, tokenize};
use crate::error::{Error, Result};

const STOPWORDS_RAW: &str = include_str!("../data/stopwords.txt");

/// Bundled default English stopword list (versioned with the repository).
pub fn default_stopwords() -> BTreeSet<String> {
    STOPWORDS_RAW
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

/// Abbreviation heuristic: all-caps with at most 5 characters, or internal
/// periods (`q.d.`, `U.S.A.`). Such tokens keep their case.
pub fn is_abbreviation_token(tok: &str) -> bool {
    let has_letter = tok.chars().any(char::is_alphabetic);
    if !has_letter {
        return false;
    }
    let all_upper = tok.chars().filter(|c| c.is_alphabetic()).all(char::is_uppercase);
    if all_upper && tok.chars().count() <= 5 {
        return true;
    }
    let chars: Vec<char> = tok.chars().collect();
    (1..chars.len().saturating_sub(1)).any(|i| {
        chars[i] == '.' && chars[i - 1].is_alphanumeric() && chars[i + 1].is_alphanumeric()
    })
}

pub fn normalize_token(tok: &str) -> String {
    if is_abbreviation_token(tok) {
        tok.to_string()
    } else {
        tok.to_lowercase()
    }
}

/// Canonical form of a term string: tokenize, normalize each token, join
/// with single spaces. Idempotent.
pub fn normalize_term(term: &str) -> String {
    let sentences = tokenize(term);
    let mut parts = Vec::new();
    for s in &sentences {
        for t in &s.tokens {
            parts.push(normalize_token(&t.text));
        }
    }
    parts.join(" ")
}

/// True for terms made of digits and numeric punctuation only.
fn is_number_term(term: &str) -> bool {
    term.chars().any(|c| c.is_ascii_digit())
        && !term.chars().any(char::is_alphabetic)
}

/// A named terminology: term string -> set of semantic-type identifiers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Terminology {
    pub name: String,
    pub entries: BTreeMap<String, BTreeSet<String>>,
}

impl Terminology {
    pub fn new(name: impl Into<String>) -> Terminology {
        Terminology { name: name.into(), entries: BTreeMap::new() }
    }

    pub fn insert(&mut self, term: &str, semantic_type: &str) {
        self.entries
            .entry(term.to_string())
            .or_default()
            .insert(semantic_type.to_string());
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Union of several terminologies under a new name.
    pub fn merged(name: impl Into<String>, parts: &[&Terminology]) -> Terminology {
        let mut out = Terminology::new(name);
        for t in parts {
            for (term, types) in &t.entries {
                out.entries.entry(term.clone()).or_default().extend(types.iter().cloned());
            }
        }
        out
    }
}

/// Read a `term \t semantic_type` file. Duplicate lines are idempotent.
pub fn load_terminology(path: impl AsRef<Path>, name: &str) -> Result<Terminology> {
    let path = path.as_ref();
    let data = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    load_terminology_str(&data, name, path)
}

pub fn load_terminology_str(data: &str, name: &str, path: &Path) -> Result<Terminology> {
    let mut t = Terminology::new(name);
    for (lineno, line) in data.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.splitn(2, '\t');
        let term = fields.next().unwrap_or("").trim();
        let sty = fields.next().map(str::trim).unwrap_or("");
        if term.is_empty() || sty.is_empty() {
            return Err(Error::parse(path, lineno, "expected `term\\tsemantic_type`"));
        }
        t.insert(term, sty);
    }
    if t.is_empty() {
        return Err(Error::Format { path: path.to_path_buf(), msg: "empty terminology".into() });
    }
    Ok(t)
}

/// Normalize terms and drop stopwords, numbers, and single-character
/// terms. Idempotent; never increases the entry count.
pub fn preprocess_terms(t: &Terminology, stopwords: &BTreeSet<String>) -> Terminology {
    let mut out = Terminology::new(t.name.clone());
    for (term, types) in &t.entries {
        let canon = normalize_term(term);
        if canon.is_empty() || canon.chars().count() < 2 {
            continue;
        }
        if is_number_term(&canon) {
            continue;
        }
        if !canon.contains(' ') && stopwords.contains(&canon.to_lowercase()) {
            continue;
        }
        out.entries.entry(canon).or_default().extend(types.iter().cloned());
    }
    out
}

/// Semantic-type identifier -> task class, or abstain (`None`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassMap {
    map: BTreeMap<String, Option<usize>>,
}

impl ClassMap {
    pub fn new(map: BTreeMap<String, Option<usize>>) -> ClassMap {
        ClassMap { map }
    }

    /// Read a JSON object mapping semantic-type name to a class name from
    /// the schema, or the literal string "abstain".
    pub fn from_json_str(data: &str, schema: &TaskSchema, path: &Path) -> Result<ClassMap> {
        let raw: BTreeMap<String, String> = serde_json::from_str(data)
            .map_err(|e| Error::parse(path, 1, format!("bad class map: {e}")))?;
        let mut map = BTreeMap::new();
        for (sty, class_name) in raw {
            let class = if class_name == "abstain" {
                None
            } else {
                Some(schema.class_index(&class_name).ok_or_else(|| {
                    Error::config(format!("class map: unknown class `{class_name}` for type `{sty}`"))
                })?)
            };
            map.insert(sty, class);
        }
        Ok(ClassMap { map })
    }

    pub fn from_json_file(path: impl AsRef<Path>, schema: &TaskSchema) -> Result<ClassMap> {
        let path = path.as_ref();
        let data = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ClassMap::from_json_str(&data, schema, path)
    }

    pub fn class_for(&self, sty: &str) -> Result<Option<usize>> {
        self.map
            .get(sty)
            .copied()
            .ok_or_else(|| Error::UnmappedSemanticType(sty.to_string()))
    }
}

/// Canonical term -> k-dimensional class probability vector.
#[derive(Debug, Clone, PartialEq)]
pub struct TermClassMap {
    pub map: BTreeMap<String, Vec<f64>>,
    pub max_token_length: usize,
}

impl TermClassMap {
    pub fn contains(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    pub fn get(&self, key: &str) -> Option<&Vec<f64>> {
        self.map.get(key)
    }

    /// Most probable class of a term, or `None` on an exact tie.
    pub fn argmax_class(&self, key: &str) -> Option<usize> {
        let vec = self.map.get(key)?;
        argmax_unique(vec)
    }
}

pub(crate) fn argmax_unique(vec: &[f64]) -> Option<usize> {
    let mut best = 0usize;
    let mut best_val = f64::NEG_INFINITY;
    let mut ties = 0usize;
    for (i, &v) in vec.iter().enumerate() {
        if v > best_val {
            best_val = v;
            best = i;
            ties = 1;
        } else if v == best_val {
            ties += 1;
        }
    }
    if ties == 1 { Some(best) } else { None }
}

/// Pool each term's semantic types across terminologies (set union) and
/// convert to a uniform probability vector over the mapped classes. Terms
/// whose types all map to abstain are dropped.
pub fn build_term_class_map(
    terminologies: &[Terminology],
    class_map: &ClassMap,
    schema: &TaskSchema,
) -> Result<TermClassMap> {
    let mut pooled: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for t in terminologies {
        for (term, types) in &t.entries {
            let canon = normalize_term(term);
            if canon.is_empty() {
                continue;
            }
            pooled.entry(canon).or_default().extend(types.iter().cloned());
        }
    }
    let mut map = BTreeMap::new();
    let mut max_token_length = 0usize;
    for (term, types) in pooled {
        let mut counts = vec![0usize; schema.k];
        let mut total = 0usize;
        for sty in &types {
            if let Some(c) = class_map.class_for(sty)? {
                counts[c] += 1;
                total += 1;
            }
        }
        if total == 0 {
            continue;
        }
        let vec: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
        max_token_length = max_token_length.max(term.split(' ').count());
        map.insert(term, vec);
    }
    Ok(TermClassMap { map, max_token_length })
}

/// Synset identifier -> synonym terms, plus the inverse index.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SynsetIndex {
    pub synsets: BTreeMap<String, BTreeSet<String>>,
    pub term_to_synsets: BTreeMap<String, BTreeSet<String>>,
}

impl SynsetIndex {
    pub fn max_token_length(&self) -> usize {
        self.term_to_synsets
            .keys()
            .map(|t| t.split(' ').count())
            .max()
            .unwrap_or(0)
    }
}

/// Read a `synset_id \t term` file. Members are preprocessed like
/// terminology terms; synsets with fewer than 2 distinct members are
/// dropped.
pub fn build_synsets(path: impl AsRef<Path>) -> Result<SynsetIndex> {
    let path = path.as_ref();
    let data = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    build_synsets_str(&data, path)
}

pub fn build_synsets_str(data: &str, path: &Path) -> Result<SynsetIndex> {
    let stopwords = default_stopwords();
    let mut raw: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (lineno, line) in data.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.splitn(2, '\t');
        let id = fields.next().unwrap_or("").trim();
        let term = fields.next().map(str::trim).unwrap_or("");
        if id.is_empty() || term.is_empty() {
            return Err(Error::parse(path, lineno, "expected `synset_id\\tterm`"));
        }
        let canon = normalize_term(term);
        if canon.chars().count() < 2 || is_number_term(&canon) {
            continue;
        }
        if !canon.contains(' ') && stopwords.contains(&canon.to_lowercase()) {
            continue;
        }
        raw.entry(id.to_string()).or_default().insert(canon);
    }
    let mut index = SynsetIndex::default();
    for (id, members) in raw {
        if members.len() < 2 {
            continue;
        }
        for m in &members {
            index.term_to_synsets.entry(m.clone()).or_default().insert(id.clone());
        }
        index.synsets.insert(id, members);
    }
    Ok(index)
}

/// Greedy left-to-right longest match of canonical keys over a normalized
/// token sequence. Returns non-overlapping `[start, end)` token spans.
pub fn longest_matches<F>(norm_tokens: &[String], max_len: usize, contains: F) -> Vec<(usize, usize)>
where
    F: Fn(&str) -> bool,
{
    let n = norm_tokens.len();
    let mut spans = Vec::new();
    let mut i = 0usize;
    while i < n {
        let cap = max_len.min(n - i);
        let mut matched = 0usize;
        for len in (1..=cap).rev() {
            let key = norm_tokens[i..i + len].join(" ");
            if contains(&key) {
                matched = len;
                break;
            }
        }
        if matched > 0 {
            spans.push((i, i + matched));
            i += matched;
        } else {
            i += 1;
        }
    }
    spans
}

pub fn normalized_sentence_tokens(tokens: &[crate::corpus::Token]) -> Vec<String> {
    tokens.iter().map(|t| normalize_token(&t.text)).collect()
}

/// Coverage-ranked split into `s` individual terminologies plus one merged
/// remainder.
#[derive(Debug, Clone)]
pub struct PartitionPlan {
    pub s: usize,
    /// All terminologies with their coverage, best first.
    pub ranked: Vec<(String, u64)>,
    pub head: Vec<Terminology>,
    pub tail_merged: Option<Terminology>,
}

/// Document-frequency coverage of one terminology over a corpus: for every
/// document, the number of distinct terms that appear as longest matches.
pub fn terminology_coverage(t: &Terminology, corpus: &Corpus) -> u64 {
    let keys: BTreeSet<&String> = t.entries.keys().collect();
    let max_len = t.entries.keys().map(|k| k.split(' ').count()).max().unwrap_or(0);
    let mut coverage = 0u64;
    for doc in &corpus.documents {
        let mut seen: BTreeSet<String> = BTreeSet::new();
        for sent in &doc.sentences {
            let norm = normalized_sentence_tokens(&sent.tokens);
            for (a, b) in longest_matches(&norm, max_len, |k| keys.contains(&k.to_string())) {
                seen.insert(norm[a..b].join(" "));
            }
        }
        coverage += seen.len() as u64;
    }
    coverage
}

/// Rank terminologies by coverage (descending, ties broken by name) and
/// split into the top `s` individual sources plus a merged tail.
pub fn rank_and_partition(
    terminologies: &[Terminology],
    corpus: &Corpus,
    s: usize,
) -> Result<PartitionPlan> {
    if corpus.documents.is_empty() {
        return Err(Error::config("cannot rank terminologies against an empty corpus"));
    }
    if s == 0 || s > terminologies.len() {
        return Err(Error::config(format!(
            "partition size s={s} out of range 1..={}",
            terminologies.len()
        )));
    }
    let mut scored: Vec<(&Terminology, u64)> = terminologies
        .iter()
        .map(|t| (t, terminology_coverage(t, corpus)))
        .collect();
    scored.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.name.cmp(&b.0.name)));

    let ranked: Vec<(String, u64)> = scored.iter().map(|(t, c)| (t.name.clone(), *c)).collect();
    let head: Vec<Terminology> = scored.iter().take(s).map(|(t, _)| (*t).clone()).collect();
    let tail: Vec<&Terminology> = scored.iter().skip(s).map(|(t, _)| *t).collect();
    let tail_merged = if tail.is_empty() {
        None
    } else {
        Some(Terminology::merged("tail_merged", &tail))
    };
    Ok(PartitionPlan { s, ranked, head, tail_merged })
}
