//! The label matrix: one row per corpus token, one column per labeling
//! function, values in `{-1, 0..k-1}`. Persisted as a binary file (magic
//! `TRLM`, little-endian u64 `n` and `m`, then `n*m` signed bytes) with a
//! text sidecar (`<path>.idx`) listing sources and the row mapping.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::corpus::{ABSTAIN, Corpus, TaskSchema};
use crate::error::{Error, Result};
use crate::labelers::LabelingFunction;
use crate::labelers::cues::EntitySpan;

const MAGIC: &[u8; 4] = b"TRLM";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowRef {
    pub doc: usize,
    pub sentence: usize,
    pub token: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix {
    pub n: usize,
    pub m: usize,
    /// Row-major votes.
    pub values: Vec<i8>,
    pub source_names: Vec<String>,
    pub rows: Vec<RowRef>,
    pub doc_ids: Vec<String>,
}

impl LabelMatrix {
    pub fn get(&self, row: usize, col: usize) -> i8 {
        self.values[row * self.m + col]
    }

    pub fn row(&self, row: usize) -> &[i8] {
        &self.values[row * self.m..(row + 1) * self.m]
    }

    /// Fraction of non-abstain votes per source.
    pub fn coverage(&self) -> Vec<f64> {
        let mut counts = vec![0usize; self.m];
        for r in 0..self.n {
            for (j, &v) in self.row(r).iter().enumerate() {
                if v != ABSTAIN {
                    counts[j] += 1;
                }
            }
        }
        counts
            .into_iter()
            .map(|c| if self.n == 0 { 0.0 } else { c as f64 / self.n as f64 })
            .collect()
    }

    pub fn write_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::with_capacity(20 + self.values.len());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&(self.n as u64).to_le_bytes());
        buf.extend_from_slice(&(self.m as u64).to_le_bytes());
        buf.extend(self.values.iter().map(|&v| v as u8));
        fs::write(path, &buf).map_err(|e| Error::io(path, e))?;

        let idx_path = sidecar_path(path);
        let mut idx = Vec::new();
        writeln!(idx, "sources\t{}", self.m).unwrap();
        for name in &self.source_names {
            writeln!(idx, "{name}").unwrap();
        }
        writeln!(idx, "rows\t{}", self.n).unwrap();
        for r in &self.rows {
            writeln!(idx, "{}\t{}\t{}", self.doc_ids[r.doc], r.sentence, r.token).unwrap();
        }
        fs::write(&idx_path, &idx).map_err(|e| Error::io(&idx_path, e))
    }

    pub fn read_binary(path: impl AsRef<Path>) -> Result<LabelMatrix> {
        let path = path.as_ref();
        let buf = fs::read(path).map_err(|e| Error::io(path, e))?;
        if buf.len() < 20 || &buf[0..4] != MAGIC {
            return Err(Error::Format { path: path.to_path_buf(), msg: "bad magic".into() });
        }
        let n = u64::from_le_bytes(buf[4..12].try_into().unwrap()) as usize;
        let m = u64::from_le_bytes(buf[12..20].try_into().unwrap()) as usize;
        if buf.len() != 20 + n * m {
            return Err(Error::Format {
                path: path.to_path_buf(),
                msg: format!("expected {} value bytes, found {}", n * m, buf.len() - 20),
            });
        }
        let values: Vec<i8> = buf[20..].iter().map(|&b| b as i8).collect();

        let idx_path = sidecar_path(path);
        let idx = fs::read_to_string(&idx_path).map_err(|e| Error::io(&idx_path, e))?;
        let mut lines = idx.lines();
        let header = lines.next().unwrap_or("");
        let m_idx: usize = header
            .strip_prefix("sources\t")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Format { path: idx_path.clone(), msg: "bad sources header".into() })?;
        if m_idx != m {
            return Err(Error::Format { path: idx_path.clone(), msg: "source count mismatch".into() });
        }
        let mut source_names = Vec::with_capacity(m);
        for _ in 0..m {
            source_names.push(
                lines
                    .next()
                    .ok_or_else(|| Error::Format { path: idx_path.clone(), msg: "truncated sources".into() })?
                    .to_string(),
            );
        }
        let header = lines.next().unwrap_or("");
        let n_idx: usize = header
            .strip_prefix("rows\t")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Format { path: idx_path.clone(), msg: "bad rows header".into() })?;
        if n_idx != n {
            return Err(Error::Format { path: idx_path.clone(), msg: "row count mismatch".into() });
        }
        let mut rows = Vec::with_capacity(n);
        let mut doc_ids: Vec<String> = Vec::new();
        for _ in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| Error::Format { path: idx_path.clone(), msg: "truncated rows".into() })?;
            let mut parts = line.split('\t');
            let (Some(doc_id), Some(sent), Some(tok)) = (parts.next(), parts.next(), parts.next())
            else {
                return Err(Error::Format { path: idx_path.clone(), msg: "bad row line".into() });
            };
            let doc = match doc_ids.last() {
                Some(last) if last == doc_id => doc_ids.len() - 1,
                _ => match doc_ids.iter().position(|d| d == doc_id) {
                    Some(i) => i,
                    None => {
                        doc_ids.push(doc_id.to_string());
                        doc_ids.len() - 1
                    }
                },
            };
            let sentence: usize = sent
                .parse()
                .map_err(|_| Error::Format { path: idx_path.clone(), msg: "bad sentence index".into() })?;
            let token: usize = tok
                .parse()
                .map_err(|_| Error::Format { path: idx_path.clone(), msg: "bad token index".into() })?;
            rows.push(RowRef { doc, sentence, token });
        }
        Ok(LabelMatrix { n, m, values, source_names, rows, doc_ids })
    }
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".idx");
    std::path::PathBuf::from(s)
}

/// Gold spans of a document resolved to covering token spans, in span
/// order. Spans outside any sentence are skipped.
pub fn gold_entity_spans(corpus: &Corpus, doc_idx: usize) -> Vec<EntitySpan> {
    let doc = &corpus.documents[doc_idx];
    let mut out = Vec::new();
    for span in corpus.gold_spans.iter().filter(|s| s.doc_id == doc.id) {
        for (si, sent) in doc.sentences.iter().enumerate() {
            let covering: Vec<usize> = sent
                .tokens
                .iter()
                .enumerate()
                .filter(|(_, t)| t.char_start < span.char_end && span.char_start < t.char_end)
                .map(|(i, _)| i)
                .collect();
            if let (Some(&first), Some(&last)) = (covering.first(), covering.last()) {
                out.push(EntitySpan { sentence: si, start: first, end: last + 1 });
                break;
            }
        }
    }
    out
}

/// Apply every labeling function to the whole corpus in deterministic row
/// order (documents, sentences, tokens). Span-level functions vote on the
/// head token of each gold entity. Returns accumulated warnings alongside
/// the matrix.
pub fn build_label_matrix(
    corpus: &Corpus,
    lfs: &[LabelingFunction],
    schema: &TaskSchema,
) -> Result<(LabelMatrix, Vec<String>)> {
    if lfs.is_empty() {
        return Err(Error::config("at least one labeling function is required"));
    }
    let n = corpus.num_tokens();
    let m = lfs.len();
    let mut values = vec![ABSTAIN; n * m];
    let mut warnings = Vec::new();

    let mut rows = Vec::with_capacity(n);
    let mut doc_offsets = Vec::with_capacity(corpus.documents.len());
    {
        let mut flat = 0usize;
        for (d, doc) in corpus.documents.iter().enumerate() {
            doc_offsets.push(flat);
            for (s, sent) in doc.sentences.iter().enumerate() {
                for t in 0..sent.tokens.len() {
                    rows.push(RowRef { doc: d, sentence: s, token: t });
                    flat += 1;
                }
            }
        }
    }

    for (j, lf) in lfs.iter().enumerate() {
        for (d, doc) in corpus.documents.iter().enumerate() {
            let sentence_offsets: Vec<usize> = {
                let mut offs = Vec::with_capacity(doc.sentences.len());
                let mut acc = doc_offsets[d];
                for sent in &doc.sentences {
                    offs.push(acc);
                    acc += sent.tokens.len();
                }
                offs
            };
            if lf.is_span_level() {
                let entities = gold_entity_spans(corpus, d);
                let (votes, mut warns) = lf.apply_entities(doc, &entities)?;
                warnings.append(&mut warns);
                for (e, vote) in entities.iter().zip(votes) {
                    if vote != ABSTAIN {
                        let row = sentence_offsets[e.sentence] + e.start;
                        values[row * m + j] = vote;
                    }
                }
            } else {
                let per_sentence = lf.apply_tokens(doc, schema)?;
                for (s, votes) in per_sentence.iter().enumerate() {
                    let expected = doc.sentences[s].tokens.len();
                    if votes.len() != expected {
                        return Err(Error::LfLengthMismatch {
                            lf: lf.name.clone(),
                            doc_id: doc.id.clone(),
                            sentence: s,
                            got: votes.len(),
                            expected,
                        });
                    }
                    for (t, &vote) in votes.iter().enumerate() {
                        debug_assert!(vote >= ABSTAIN && (vote as i64) < schema.k as i64);
                        values[(sentence_offsets[s] + t) * m + j] = vote;
                    }
                }
            }
        }
    }

    let matrix = LabelMatrix {
        n,
        m,
        values,
        source_names: lfs.iter().map(|l| l.name.clone()).collect(),
        rows,
        doc_ids: corpus.documents.iter().map(|d| d.id.clone()).collect(),
    };
    Ok((matrix, warnings))
}
