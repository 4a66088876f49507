//! IO/BIO tag handling, span extraction, and exact-match
//! precision/recall/F1 with micro-averaging.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::TaskSchema;

/// A typed span over token indices `[start, end)` of sequence `seq`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TagSpan {
    pub seq: usize,
    pub start: usize,
    pub end: usize,
    pub class_name: String,
}

/// IO integer tags to BIO strings: the first token of each maximal
/// same-class run becomes `B-`, the rest `I-`, and the default class
/// becomes `O`.
pub fn io_to_bio(tags: &[usize], schema: &TaskSchema) -> Vec<String> {
    let mut out = Vec::with_capacity(tags.len());
    for (i, &t) in tags.iter().enumerate() {
        if t == schema.default_class {
            out.push("O".to_string());
        } else {
            let name = &schema.class_names[t];
            let begins = i == 0 || tags[i - 1] != t;
            out.push(format!("{}-{}", if begins { "B" } else { "I" }, name));
        }
    }
    out
}

/// Maximal spans from a BIO sequence. An `I-` tag following `O` or a
/// different type is repaired as `B-` (conlleval convention); the second
/// return value counts repairs.
pub fn extract_spans(bio: &[String]) -> (Vec<(usize, usize, String)>, usize) {
    let mut spans = Vec::new();
    let mut repairs = 0usize;
    let mut open: Option<(usize, String)> = None;
    for (i, tag) in bio.iter().enumerate() {
        let (marker, name) = match tag.split_once('-') {
            Some((m, n)) if m == "B" || m == "I" => (m, n.to_string()),
            _ => ("O", String::new()),
        };
        match marker {
            "B" => {
                if let Some((s, n)) = open.take() {
                    spans.push((s, i, n));
                }
                open = Some((i, name));
            }
            "I" => match &open {
                Some((_, n)) if *n == name => {}
                _ => {
                    repairs += 1;
                    if let Some((s, n)) = open.take() {
                        spans.push((s, i, n));
                    }
                    open = Some((i, name));
                }
            },
            _ => {
                if let Some((s, n)) = open.take() {
                    spans.push((s, i, n));
                }
            }
        }
    }
    if let Some((s, n)) = open {
        spans.push((s, bio.len(), n));
    }
    (spans, repairs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    /// A true positive requires identical (start, end, class).
    ExactSpan,
    /// Micro-averaged per-token scores over non-default classes.
    TokenMicro,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    pub fn precision(&self) -> f64 {
        if self.tp + self.fp == 0 { 0.0 } else { self.tp as f64 / (self.tp + self.fp) as f64 }
    }

    pub fn recall(&self) -> f64 {
        if self.tp + self.fn_ == 0 { 0.0 } else { self.tp as f64 / (self.tp + self.fn_) as f64 }
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: EvalMode,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub per_class: BTreeMap<String, Counts>,
}

impl EvalReport {
    fn from_per_class(mode: EvalMode, per_class: BTreeMap<String, Counts>) -> EvalReport {
        let mut micro = Counts::default();
        for c in per_class.values() {
            micro.tp += c.tp;
            micro.fp += c.fp;
            micro.fn_ += c.fn_;
        }
        EvalReport {
            mode,
            precision: micro.precision(),
            recall: micro.recall(),
            f1: micro.f1(),
            tp: micro.tp,
            fp: micro.fp,
            fn_: micro.fn_,
            per_class,
        }
    }

    /// Flat key/value text block.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "mode\t{}\n",
            match self.mode {
                EvalMode::ExactSpan => "exact_span",
                EvalMode::TokenMicro => "token_micro",
            }
        ));
        out.push_str(&format!("precision\t{:.6}\n", self.precision));
        out.push_str(&format!("recall\t{:.6}\n", self.recall));
        out.push_str(&format!("f1\t{:.6}\n", self.f1));
        out.push_str(&format!("tp\t{}\nfp\t{}\nfn\t{}\n", self.tp, self.fp, self.fn_));
        for (name, c) in &self.per_class {
            out.push_str(&format!(
                "class\t{name}\tP={:.6}\tR={:.6}\tF1={:.6}\ttp={}\tfp={}\tfn={}\n",
                c.precision(),
                c.recall(),
                c.f1(),
                c.tp,
                c.fp,
                c.fn_
            ));
        }
        out
    }
}

/// Exact-span or token-micro precision/recall/F1, micro-averaged over
/// classes.
pub fn span_prf(pred: &[TagSpan], gold: &[TagSpan], mode: EvalMode) -> EvalReport {
    match mode {
        EvalMode::ExactSpan => {
            let pred_set: BTreeSet<&TagSpan> = pred.iter().collect();
            let gold_set: BTreeSet<&TagSpan> = gold.iter().collect();
            let mut per_class: BTreeMap<String, Counts> = BTreeMap::new();
            for p in &pred_set {
                let c = per_class.entry(p.class_name.clone()).or_default();
                if gold_set.contains(p) {
                    c.tp += 1;
                } else {
                    c.fp += 1;
                }
            }
            for g in &gold_set {
                if !pred_set.contains(g) {
                    per_class.entry(g.class_name.clone()).or_default().fn_ += 1;
                }
            }
            EvalReport::from_per_class(mode, per_class)
        }
        EvalMode::TokenMicro => {
            let expand = |spans: &[TagSpan]| -> BTreeSet<(usize, usize, String)> {
                spans
                    .iter()
                    .flat_map(|s| (s.start..s.end).map(move |t| (s.seq, t, s.class_name.clone())))
                    .collect()
            };
            let pred_tok = expand(pred);
            let gold_tok = expand(gold);
            let mut per_class: BTreeMap<String, Counts> = BTreeMap::new();
            for p in &pred_tok {
                let c = per_class.entry(p.2.clone()).or_default();
                if gold_tok.contains(p) {
                    c.tp += 1;
                } else {
                    c.fp += 1;
                }
            }
            for g in &gold_tok {
                if !pred_tok.contains(g) {
                    per_class.entry(g.2.clone()).or_default().fn_ += 1;
                }
            }
            EvalReport::from_per_class(mode, per_class)
        }
    }
}

/// Spans of a whole tag-sequence collection: each sequence is converted to
/// BIO, extracted, and stamped with its index.
pub fn spans_of_sequences(sequences: &[Vec<usize>], schema: &TaskSchema) -> Vec<TagSpan> {
    let mut out = Vec::new();
    for (seq, tags) in sequences.iter().enumerate() {
        let bio = io_to_bio(tags, schema);
        let (spans, _) = extract_spans(&bio);
        for (start, end, class_name) in spans {
            out.push(TagSpan { seq, start, end, class_name });
        }
    }
    out
}

/// Mean and sample standard deviation, for multi-seed reporting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
}

pub fn summarize(values: &[f64]) -> Summary {
    let n = values.len();
    if n == 0 {
        return Summary { mean: 0.0, sd: 0.0 };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    Summary { mean, sd }
}

#[cfg(test)]
pub(crate) mod oracle {
    //! Independent brute-force span scoring used only to check `span_prf`.

    use super::*;

    /// Maximal same-class runs scanned directly off IO tags.
    pub fn spans_by_run_scan(sequences: &[Vec<usize>], schema: &TaskSchema) -> BTreeSet<TagSpan> {
        let mut out = BTreeSet::new();
        for (seq, tags) in sequences.iter().enumerate() {
            let mut i = 0usize;
            while i < tags.len() {
                if tags[i] == schema.default_class {
                    i += 1;
                    continue;
                }
                let class = tags[i];
                let mut j = i;
                while j < tags.len() && tags[j] == class {
                    j += 1;
                }
                out.insert(TagSpan {
                    seq,
                    start: i,
                    end: j,
                    class_name: schema.class_names[class].clone(),
                });
                i = j;
            }
        }
        out
    }

    pub fn brute_force_exact(pred: &BTreeSet<TagSpan>, gold: &BTreeSet<TagSpan>) -> (usize, usize, usize, f64, f64, f64) {
        let tp = pred.intersection(gold).count();
        let fp = pred.len() - tp;
        let fn_ = gold.len() - tp;
        let c = Counts { tp, fp, fn_ };
        (tp, fp, fn_, c.precision(), c.recall(), c.f1())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn schema2() -> TaskSchema {
        TaskSchema::binary("ENT")
    }

    fn schema3() -> TaskSchema {
        TaskSchema::new(vec!["O".into(), "c1".into(), "c2".into()], 0).unwrap()
    }

    fn strs(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn io_to_bio_marks_run_starts() {
        let bio = io_to_bio(&[1, 1, 0, 1], &schema2());
        assert_eq!(bio, strs(&["B-ENT", "I-ENT", "O", "B-ENT"]));
        assert!(io_to_bio(&[], &schema2()).is_empty());
    }

    #[test]
    fn io_to_bio_class_change_starts_new_span() {
        let bio = io_to_bio(&[1, 2, 2], &schema3());
        assert_eq!(bio, strs(&["B-c1", "B-c2", "I-c2"]));
    }

    #[test]
    fn extract_simple_span() {
        let (spans, repairs) = extract_spans(&strs(&["B-c", "I-c", "O"]));
        assert_eq!(spans, vec![(0, 2, "c".to_string())]);
        assert_eq!(repairs, 0);
    }

    #[test]
    fn extract_repairs_bare_inside_tag() {
        let (spans, repairs) = extract_spans(&strs(&["O", "I-c"]));
        assert_eq!(spans, vec![(1, 2, "c".to_string())]);
        assert_eq!(repairs, 1);
    }

    #[test]
    fn extract_all_outside_is_empty() {
        let (spans, repairs) = extract_spans(&strs(&["O", "O", "O"]));
        assert!(spans.is_empty());
        assert_eq!(repairs, 0);
    }

    #[test]
    fn extract_type_change_inside_repairs() {
        let (spans, repairs) = extract_spans(&strs(&["B-a", "I-b"]));
        assert_eq!(spans, vec![(0, 1, "a".to_string()), (1, 2, "b".to_string())]);
        assert_eq!(repairs, 1);
    }

    fn span(seq: usize, start: usize, end: usize, class: &str) -> TagSpan {
        TagSpan { seq, start, end, class_name: class.to_string() }
    }

    #[test]
    fn exact_match_requires_identical_boundaries() {
        let gold = vec![span(0, 0, 3, "c")];
        let pred = vec![span(0, 0, 2, "c")];
        let r = span_prf(&pred, &gold, EvalMode::ExactSpan);
        assert_eq!((r.tp, r.fp, r.fn_), (0, 1, 1));
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn perfect_prediction_scores_one() {
        let gold = vec![span(0, 0, 2, "c"), span(1, 4, 6, "c")];
        let r = span_prf(&gold, &gold, EvalMode::ExactSpan);
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn half_right_scores_half() {
        let gold = vec![span(0, 0, 2, "c"), span(0, 5, 6, "c")];
        let pred = vec![span(0, 0, 2, "c"), span(0, 8, 9, "c")];
        let r = span_prf(&pred, &gold, EvalMode::ExactSpan);
        assert_eq!((r.precision, r.recall, r.f1), (0.5, 0.5, 0.5));
    }

    #[test]
    fn token_micro_counts_token_overlap() {
        let gold = vec![span(0, 0, 3, "c")];
        let pred = vec![span(0, 0, 2, "c")];
        let r = span_prf(&pred, &gold, EvalMode::TokenMicro);
        assert_eq!((r.tp, r.fp, r.fn_), (2, 0, 1));
    }

    #[test]
    fn round_trip_tags_spans_tags() {
        let schema = schema3();
        let tags = vec![0, 1, 1, 0, 2, 1, 1, 0];
        let bio = io_to_bio(&tags, &schema);
        let (spans, repairs) = extract_spans(&bio);
        assert_eq!(repairs, 0);
        let mut rebuilt = vec![schema.default_class; tags.len()];
        for (s, e, name) in spans {
            let class = schema.class_index(&name).unwrap();
            for t in rebuilt.iter_mut().take(e).skip(s) {
                *t = class;
            }
        }
        assert_eq!(rebuilt, tags);
    }

    #[test]
    fn prf_matches_brute_force_on_random_pairs() {
        let schema = schema3();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let len = rng.random_range(1..30usize);
            let random_tags = |rng: &mut ChaCha8Rng| -> Vec<Vec<usize>> {
                (0..2)
                    .map(|_| (0..len).map(|_| rng.random_range(0..3usize)).collect())
                    .collect()
            };
            let pred_seqs = random_tags(&mut rng);
            let gold_seqs = random_tags(&mut rng);

            let pred = spans_of_sequences(&pred_seqs, &schema);
            let gold = spans_of_sequences(&gold_seqs, &schema);
            let report = span_prf(&pred, &gold, EvalMode::ExactSpan);

            let pred_oracle = oracle::spans_by_run_scan(&pred_seqs, &schema);
            let gold_oracle = oracle::spans_by_run_scan(&gold_seqs, &schema);
            let (tp, fp, fn_, p, r, f1) = oracle::brute_force_exact(&pred_oracle, &gold_oracle);

            assert_eq!((report.tp, report.fp, report.fn_), (tp, fp, fn_));
            assert_eq!((report.precision, report.recall, report.f1), (p, r, f1));
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn tags_to_spans_and_back(tags in proptest::collection::vec(0usize..3, 0..40)) {
                let schema = TaskSchema::new(
                    vec!["O".into(), "c1".into(), "c2".into()], 0).unwrap();
                let bio = io_to_bio(&tags, &schema);
                let (spans, repairs) = extract_spans(&bio);
                prop_assert_eq!(repairs, 0, "io_to_bio emits well-formed BIO");
                let mut rebuilt = vec![0usize; tags.len()];
                for (s, e, name) in spans {
                    let class = schema.class_index(&name).unwrap();
                    for t in rebuilt.iter_mut().take(e).skip(s) {
                        *t = class;
                    }
                }
                prop_assert_eq!(rebuilt, tags);
            }

            #[test]
            fn self_comparison_is_perfect(tags in proptest::collection::vec(0usize..3, 1..40)) {
                let schema = TaskSchema::new(
                    vec!["O".into(), "c1".into(), "c2".into()], 0).unwrap();
                let spans = spans_of_sequences(&[tags], &schema);
                let r = span_prf(&spans, &spans, EvalMode::ExactSpan);
                if spans.is_empty() {
                    prop_assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
                } else {
                    prop_assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
                }
                let t = span_prf(&spans, &spans, EvalMode::TokenMicro);
                prop_assert_eq!(t.fp + t.fn_, 0);
            }
        }
    }

    #[test]
    fn summary_mean_and_sd() {
        let s = summarize(&[1.0, 2.0, 3.0]);
        assert!((s.mean - 2.0).abs() < 1e-12);
        assert!((s.sd - 1.0).abs() < 1e-12);
        let s = summarize(&[5.0]);
        assert_eq!(s.sd, 0.0);
    }
}
