//! Documents, tokenization, and alignment of gold character spans to
//! token-level tag sequences.
//!
//! The tokenizer splits on whitespace and detaches leading/trailing
//! punctuation into single-character tokens. Intra-word hyphens stay put
//! (`ST-T` is one token) and a trailing period is kept when the token has
//! internal periods (`q.d.`, `U.S.A.`). Sentences end at a newline or at
//! terminal punctuation followed by whitespace and an uppercase letter.
//! All offsets are character offsets into the document text.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dates::Date;
use crate::error::{Error, Result};

/// Vote emitted by a labeling function for "no opinion".
pub const ABSTAIN: i8 = -1;

/// Class layout for one tagging task: `k` classes named `class_names`,
/// with `default_class` playing the role of "outside".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSchema {
    pub k: usize,
    pub class_names: Vec<String>,
    pub default_class: usize,
}

impl TaskSchema {
    pub fn new(class_names: Vec<String>, default_class: usize) -> Result<TaskSchema> {
        let k = class_names.len();
        if k < 2 {
            return Err(Error::config("task schema needs at least 2 classes"));
        }
        if default_class >= k {
            return Err(Error::config(format!(
                "default class {default_class} out of range for k={k}"
            )));
        }
        let distinct: BTreeSet<&String> = class_names.iter().collect();
        if distinct.len() != k {
            return Err(Error::config("class names must be distinct"));
        }
        Ok(TaskSchema { k, class_names, default_class })
    }

    /// Two-class schema `O`/`name` with the outside class as default.
    pub fn binary(entity_name: &str) -> TaskSchema {
        TaskSchema::new(vec!["O".to_string(), entity_name.to_string()], 0).unwrap()
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|n| n == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub char_start: usize,
    pub char_end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub tokens: Vec<Token>,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub sentences: Vec<Sentence>,
    pub timestamp: Option<Date>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Document {
        let text = text.into();
        let sentences = tokenize(&text);
        Document { id: id.into(), text, sentences, timestamp: None }
    }

    pub fn num_tokens(&self) -> usize {
        self.sentences.iter().map(|s| s.tokens.len()).sum()
    }

    /// Token texts of one sentence, normalized the way dictionaries are.
    pub fn sentence_tokens(&self, sentence: usize) -> &[Token] {
        &self.sentences[sentence].tokens
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldSpan {
    pub doc_id: String,
    pub char_start: usize,
    pub char_end: usize,
    pub class_label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub gold_spans: Vec<GoldSpan>,
}

impl Corpus {
    pub fn num_tokens(&self) -> usize {
        self.documents.iter().map(Document::num_tokens).sum()
    }

    pub fn gold_for_doc<'a>(&'a self, doc_id: &str) -> Vec<&'a GoldSpan> {
        self.gold_spans.iter().filter(|s| s.doc_id == doc_id).collect()
    }

    /// Deterministic row order shared by label matrices and datasets:
    /// documents in corpus order, then sentences, then tokens.
    pub fn rows(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::with_capacity(self.num_tokens());
        for (d, doc) in self.documents.iter().enumerate() {
            for (s, sent) in doc.sentences.iter().enumerate() {
                for t in 0..sent.tokens.len() {
                    out.push((d, s, t));
                }
            }
        }
        out
    }
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// True when `chars[lo..hi]` contains a period with alphanumerics on both
/// sides, e.g. the core of `q.d.` or `U.S.A.`.
fn has_internal_period(chars: &[char], lo: usize, hi: usize) -> bool {
    if hi <= lo + 2 {
        return false;
    }
    (lo + 1..hi - 1).any(|p| {
        chars[p] == '.' && is_word_char(chars[p - 1]) && is_word_char(chars[p + 1])
    })
}

/// Split `text` into sentences of tokens. Deterministic; every
/// non-whitespace character lands in exactly one token; empty text gives
/// an empty list.
pub fn tokenize(text: &str) -> Vec<Sentence> {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();

    // Sentence cut positions (exclusive end of a sentence slice).
    let mut cuts: BTreeSet<usize> = BTreeSet::new();
    cuts.insert(0);
    cuts.insert(n);
    for i in 0..n {
        if chars[i] == '\n' {
            cuts.insert(i);
            cuts.insert(i + 1);
        } else if is_terminal(chars[i]) {
            let mut j = i + 1;
            let mut saw_ws = false;
            while j < n && chars[j].is_whitespace() && chars[j] != '\n' {
                saw_ws = true;
                j += 1;
            }
            if saw_ws && j < n && chars[j].is_uppercase() {
                cuts.insert(i + 1);
            }
        }
    }

    let bounds: Vec<usize> = cuts.into_iter().collect();
    let mut sentences = Vec::new();
    for w in bounds.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        while lo < hi && chars[lo].is_whitespace() {
            lo += 1;
        }
        while hi > lo && chars[hi - 1].is_whitespace() {
            hi -= 1;
        }
        if lo == hi {
            continue;
        }
        let tokens = tokenize_range(&chars, lo, hi);
        if !tokens.is_empty() {
            let index = sentences.len();
            sentences.push(Sentence { tokens, index });
        }
    }
    sentences
}

fn tokenize_range(chars: &[char], lo: usize, hi: usize) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut a = lo;
    while a < hi {
        if chars[a].is_whitespace() {
            a += 1;
            continue;
        }
        let mut b = a;
        while b < hi && !chars[b].is_whitespace() {
            b += 1;
        }
        emit_chunk(chars, a, b, &mut tokens);
        a = b;
    }
    tokens
}

fn emit_chunk(chars: &[char], a: usize, b: usize, out: &mut Vec<Token>) {
    let mut i = a;
    let mut j = b;
    while i < j && !is_word_char(chars[i]) {
        out.push(make_token(chars, i, i + 1));
        i += 1;
    }
    while j > i && !is_word_char(chars[j - 1]) {
        if chars[j - 1] == '.' && has_internal_period(chars, i, j - 1) {
            break;
        }
        j -= 1;
    }
    if i < j {
        out.push(make_token(chars, i, j));
    }
    for p in j..b {
        if is_word_char(chars[p]) {
            // Unreachable by construction: everything in [j, b) is punctuation.
            continue;
        }
        out.push(make_token(chars, p, p + 1));
    }
}

fn make_token(chars: &[char], start: usize, end: usize) -> Token {
    Token {
        text: chars[start..end].iter().collect(),
        char_start: start,
        char_end: end,
    }
}

/// One line of a corpus JSONL file.
#[derive(Debug, Deserialize)]
struct RawRecord {
    id: String,
    text: String,
    #[serde(default)]
    spans: Option<Vec<(usize, usize, i64)>>,
    #[serde(default)]
    timestamp: Option<String>,
}

/// Read a line-delimited JSON corpus. Each record carries `id`, `text`,
/// optional `spans` as `[start, end, class]` triples, and an optional
/// ISO-8601 `timestamp`.
pub fn ingest_corpus(path: impl AsRef<Path>, schema: &TaskSchema) -> Result<Corpus> {
    let path = path.as_ref();
    let data = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ingest_corpus_str(&data, schema, path)
}

pub fn ingest_corpus_str(data: &str, schema: &TaskSchema, path: &Path) -> Result<Corpus> {
    let mut documents = Vec::new();
    let mut gold_spans = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();

    for (lineno, line) in data.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: RawRecord = serde_json::from_str(line)
            .map_err(|e| Error::parse(path, lineno, format!("malformed record: {e}")))?;
        if !seen.insert(rec.id.clone()) {
            return Err(Error::DuplicateDocId(rec.id));
        }
        let timestamp = match &rec.timestamp {
            None => None,
            Some(raw) => Some(Date::parse_iso(raw).ok_or_else(|| {
                Error::parse(path, lineno, format!("bad timestamp `{raw}` (want YYYY-MM-DD)"))
            })?),
        };
        let mut doc = Document::new(rec.id.clone(), rec.text);
        doc.timestamp = timestamp;
        let text_len = doc.text.chars().count();
        if let Some(spans) = rec.spans {
            for (start, end, class) in spans {
                if class < 0 || class as usize >= schema.k {
                    return Err(Error::InvalidSpan {
                        doc_id: rec.id.clone(),
                        start,
                        end,
                        class,
                        msg: format!("class must lie in 0..{}", schema.k),
                    });
                }
                if start >= end || end > text_len {
                    return Err(Error::InvalidSpan {
                        doc_id: rec.id.clone(),
                        start,
                        end,
                        class,
                        msg: format!("span exceeds document length {text_len}"),
                    });
                }
                gold_spans.push(GoldSpan {
                    doc_id: rec.id.clone(),
                    char_start: start,
                    char_end: end,
                    class_label: class as usize,
                });
            }
        }
        documents.push(doc);
    }
    Ok(Corpus { documents, gold_spans })
}

/// Token-level IO tags for one document plus alignment warnings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignedTags {
    /// One tag per token, flattened over sentences in order.
    pub tags: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Project gold character spans onto tokens. A token whose range
/// intersects a span takes that span's class; partial intersections expand
/// to the covering token and record a warning. Overlapping spans of
/// different classes are rejected.
pub fn align_gold(doc: &Document, spans: &[GoldSpan], schema: &TaskSchema) -> Result<AlignedTags> {
    let mut ordered: Vec<&GoldSpan> = spans.iter().collect();
    ordered.sort_by_key(|s| (s.char_start, s.char_end, s.class_label));
    for pair in ordered.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b.char_start < a.char_end && a.class_label != b.class_label {
            return Err(Error::OverlappingSpans {
                doc_id: doc.id.clone(),
                a_start: a.char_start,
                a_end: a.char_end,
                a_class: a.class_label,
                b_start: b.char_start,
                b_end: b.char_end,
                b_class: b.class_label,
            });
        }
    }

    let mut tags = vec![schema.default_class; doc.num_tokens()];
    let mut warnings = Vec::new();
    for span in &ordered {
        if span.doc_id != doc.id {
            return Err(Error::InvalidSpan {
                doc_id: span.doc_id.clone(),
                start: span.char_start,
                end: span.char_end,
                class: span.class_label as i64,
                msg: format!("span does not belong to document `{}`", doc.id),
            });
        }
        let mut flat = 0usize;
        for sent in &doc.sentences {
            for tok in &sent.tokens {
                let overlap = tok.char_start < span.char_end && span.char_start < tok.char_end;
                if overlap {
                    tags[flat] = span.class_label;
                    let partial = span.char_start > tok.char_start || span.char_end < tok.char_end;
                    if partial {
                        warnings.push(format!(
                            "doc `{}`: span [{}, {}) partially covers token `{}` [{}, {}); expanded",
                            doc.id, span.char_start, span.char_end, tok.text, tok.char_start, tok.char_end
                        ));
                    }
                }
                flat += 1;
            }
        }
    }
    Ok(AlignedTags { tags, warnings })
}

/// Per-sentence view of flat document tags.
pub fn split_tags_by_sentence(doc: &Document, tags: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(doc.sentences.len());
    let mut flat = 0usize;
    for sent in &doc.sentences {
        let n = sent.tokens.len();
        out.push(tags[flat..flat + n].to_vec());
        flat += n;
    }
    out
}
