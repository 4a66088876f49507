//! Labeling functions: rules that map sentences (or pre-identified entity
//! spans) to per-token votes in `{-1, 0..k-1}`, assembled into the label
//! matrix.

pub mod cues;
pub mod matcher;
pub mod matrix;
pub mod synset;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, TaskSchema};
use crate::error::Result;
use crate::ontology::{SynsetIndex, TermClassMap, normalize_term};

pub use cues::{CueRule, DatetimeRule, Direction, EntitySpan};
pub use matrix::{LabelMatrix, RowRef, build_label_matrix, gold_entity_spans};
pub use synset::SynsetMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LfKind {
    SemanticType,
    Synset,
    Pattern,
    GuidelineDict,
    CueWindow,
    NearestDatetime,
}

#[derive(Debug, Clone)]
pub enum LfRule {
    SemanticType {
        tcm: TermClassMap,
        slot_patterns: bool,
    },
    Synset {
        index: SynsetIndex,
        tcm: TermClassMap,
        mode: SynsetMode,
    },
    Pattern {
        patterns: Vec<regex::Regex>,
        label: usize,
    },
    GuidelineDict {
        positive: BTreeMap<String, ()>,
        negative: BTreeMap<String, ()>,
        positive_class: usize,
        stopwords: BTreeSet<String>,
        vote_stopwords: bool,
        vote_punct_numbers: bool,
    },
    CueWindow(CueRule),
    NearestDatetime(DatetimeRule),
}

/// A named labeling function. Token-level kinds emit one vote per token of
/// every sentence; span-level kinds emit one vote per pre-identified
/// entity.
#[derive(Debug, Clone)]
pub struct LabelingFunction {
    pub name: String,
    pub rule: LfRule,
}

impl LabelingFunction {
    pub fn semantic_type(name: impl Into<String>, tcm: TermClassMap, slot_patterns: bool) -> Self {
        LabelingFunction { name: name.into(), rule: LfRule::SemanticType { tcm, slot_patterns } }
    }

    pub fn synset(
        name: impl Into<String>,
        index: SynsetIndex,
        tcm: TermClassMap,
        mode: SynsetMode,
    ) -> Self {
        LabelingFunction { name: name.into(), rule: LfRule::Synset { index, tcm, mode } }
    }

    /// Compiles patterns eagerly so a bad regex is a load-time error.
    pub fn pattern(name: impl Into<String>, patterns: &[String], label: usize) -> Result<Self> {
        let compiled = cues::compile_case_insensitive(patterns)?;
        Ok(LabelingFunction { name: name.into(), rule: LfRule::Pattern { patterns: compiled, label } })
    }

    pub fn guideline(
        name: impl Into<String>,
        positive: &[String],
        negative: &[String],
        positive_class: usize,
        stopwords: BTreeSet<String>,
    ) -> Self {
        let canon = |terms: &[String]| -> BTreeMap<String, ()> {
            terms
                .iter()
                .map(|t| normalize_term(t))
                .filter(|t| !t.is_empty())
                .map(|t| (t, ()))
                .collect()
        };
        LabelingFunction {
            name: name.into(),
            rule: LfRule::GuidelineDict {
                positive: canon(positive),
                negative: canon(negative),
                positive_class,
                stopwords,
                vote_stopwords: true,
                vote_punct_numbers: true,
            },
        }
    }

    /// Guideline dictionary with explicit control over the built-in
    /// stopword and punctuation/number default votes.
    pub fn guideline_with_flags(
        name: impl Into<String>,
        positive: &[String],
        negative: &[String],
        positive_class: usize,
        stopwords: BTreeSet<String>,
        vote_stopwords: bool,
        vote_punct_numbers: bool,
    ) -> Self {
        let mut lf = LabelingFunction::guideline(name, positive, negative, positive_class, stopwords);
        if let LfRule::GuidelineDict {
            vote_stopwords: vs, vote_punct_numbers: vp, ..
        } = &mut lf.rule
        {
            *vs = vote_stopwords;
            *vp = vote_punct_numbers;
        }
        lf
    }

    pub fn cue_window(name: impl Into<String>, rule: CueRule) -> Self {
        LabelingFunction { name: name.into(), rule: LfRule::CueWindow(rule) }
    }

    pub fn nearest_datetime(name: impl Into<String>, rule: DatetimeRule) -> Self {
        LabelingFunction { name: name.into(), rule: LfRule::NearestDatetime(rule) }
    }

    pub fn kind(&self) -> LfKind {
        match &self.rule {
            LfRule::SemanticType { .. } => LfKind::SemanticType,
            LfRule::Synset { .. } => LfKind::Synset,
            LfRule::Pattern { .. } => LfKind::Pattern,
            LfRule::GuidelineDict { .. } => LfKind::GuidelineDict,
            LfRule::CueWindow(_) => LfKind::CueWindow,
            LfRule::NearestDatetime(_) => LfKind::NearestDatetime,
        }
    }

    pub fn is_span_level(&self) -> bool {
        matches!(self.rule, LfRule::CueWindow(_) | LfRule::NearestDatetime(_))
    }

    /// Votes per sentence for token-level kinds.
    pub fn apply_tokens(&self, doc: &Document, schema: &TaskSchema) -> Result<Vec<Vec<i8>>> {
        match &self.rule {
            LfRule::SemanticType { tcm, slot_patterns } => Ok(doc
                .sentences
                .iter()
                .map(|s| matcher::apply_semantic_type_lf(tcm, &s.tokens, *slot_patterns))
                .collect()),
            LfRule::Synset { index, tcm, mode } => Ok(synset::apply_synset_lf(index, tcm, doc, *mode)),
            LfRule::Pattern { patterns, label } => Ok((0..doc.sentences.len())
                .map(|s| matcher::apply_pattern_lf(patterns, *label, doc, s))
                .collect()),
            LfRule::GuidelineDict {
                positive,
                negative,
                positive_class,
                stopwords,
                vote_stopwords,
                vote_punct_numbers,
            } => Ok(doc
                .sentences
                .iter()
                .map(|s| {
                    matcher::apply_guideline_dict_lf(
                        positive,
                        negative,
                        &s.tokens,
                        *positive_class,
                        schema.default_class,
                        stopwords,
                        *vote_stopwords,
                        *vote_punct_numbers,
                    )
                })
                .collect()),
            _ => Err(crate::error::Error::config(format!(
                "labeling function `{}` is span-level",
                self.name
            ))),
        }
    }

    /// One vote per entity for span-level kinds, plus warnings.
    pub fn apply_entities(
        &self,
        doc: &Document,
        entities: &[EntitySpan],
    ) -> Result<(Vec<i8>, Vec<String>)> {
        match &self.rule {
            LfRule::CueWindow(rule) => Ok((cues::apply_cue_window_lf(rule, doc, entities)?, vec![])),
            LfRule::NearestDatetime(rule) => cues::apply_nearest_datetime_lf(rule, doc, entities),
            _ => Err(crate::error::Error::config(format!(
                "labeling function `{}` is token-level",
                self.name
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ABSTAIN, Corpus, GoldSpan};
    use crate::ontology::{ClassMap, Terminology, build_term_class_map, default_stopwords};

    fn schema2() -> TaskSchema {
        TaskSchema::binary("ENT")
    }

    fn fever_tcm() -> TermClassMap {
        let mut t = Terminology::new("t");
        t.insert("fever", "DISO");
        t.insert("chest pain", "DISO");
        let cm = ClassMap::new([("DISO".to_string(), Some(1))].into_iter().collect());
        build_term_class_map(&[t], &cm, &schema2()).unwrap()
    }

    fn corpus2() -> Corpus {
        let d1 = Document::new("d1", "fever and chills");
        let d2 = Document::new("d2", "chest pain today");
        Corpus {
            documents: vec![d1, d2],
            gold_spans: vec![
                GoldSpan { doc_id: "d1".into(), char_start: 0, char_end: 5, class_label: 1 },
                GoldSpan { doc_id: "d2".into(), char_start: 0, char_end: 10, class_label: 1 },
            ],
        }
    }

    #[test]
    fn matrix_shape_and_row_order() {
        let corpus = corpus2();
        let lfs = vec![
            LabelingFunction::semantic_type("LF_dict", fever_tcm(), false),
            LabelingFunction::pattern("LF_none", &["zzz".to_string()], 1).unwrap(),
        ];
        let (matrix, warnings) = build_label_matrix(&corpus, &lfs, &schema2()).unwrap();
        assert!(warnings.is_empty());
        assert_eq!((matrix.n, matrix.m), (6, 2));
        assert_eq!(matrix.source_names, vec!["LF_dict", "LF_none"]);
        // all-abstain LF gives a column of -1
        assert!((0..matrix.n).all(|r| matrix.get(r, 1) == ABSTAIN));
        assert_eq!(matrix.rows[0], RowRef { doc: 0, sentence: 0, token: 0 });
        assert_eq!(matrix.rows[5], RowRef { doc: 1, sentence: 0, token: 2 });
    }

    #[test]
    fn matrix_matches_hand_computed_table() {
        let corpus = corpus2();
        let stop = default_stopwords();
        let lfs = vec![
            LabelingFunction::semantic_type("LF_dict", fever_tcm(), false),
            LabelingFunction::guideline("LF_guide", &[], &["chills".to_string()], 1, stop),
        ];
        let (matrix, _) = build_label_matrix(&corpus, &lfs, &schema2()).unwrap();
        // d1: fever(1,-1) and(-1,0 stopword) chills(-1,0 negative)
        // d2: chest(1,-1) pain(1,-1) today(-1,-1)
        let want: Vec<i8> = vec![
            1, -1, //
            -1, 0, //
            -1, 0, //
            1, -1, //
            1, -1, //
            -1, -1,
        ];
        assert_eq!(matrix.values, want);
    }

    #[test]
    fn column_permutation_equivariance() {
        let corpus = corpus2();
        let a = LabelingFunction::semantic_type("A", fever_tcm(), false);
        let b = LabelingFunction::guideline("B", &[], &["chills".to_string()], 1, default_stopwords());
        let (m1, _) = build_label_matrix(&corpus, &[a.clone(), b.clone()], &schema2()).unwrap();
        let (m2, _) = build_label_matrix(&corpus, &[b, a], &schema2()).unwrap();
        for r in 0..m1.n {
            assert_eq!(m1.get(r, 0), m2.get(r, 1));
            assert_eq!(m1.get(r, 1), m2.get(r, 0));
        }
    }

    #[test]
    fn span_level_votes_land_on_head_tokens() {
        let corpus = corpus2();
        let rule = CueRule::new(&["today".to_string()], Direction::Right, 3, 1, &[]).unwrap();
        let lfs = vec![
            LabelingFunction::semantic_type("LF_dict", fever_tcm(), false),
            LabelingFunction::cue_window("LF_cue", rule),
        ];
        let (matrix, _) = build_label_matrix(&corpus, &lfs, &schema2()).unwrap();
        // d2 entity "chest pain" head token is row 3; cue "today" in right window
        assert_eq!(matrix.get(3, 1), 1);
        // non-head entity token and d1 entity (no cue) abstain
        assert_eq!(matrix.get(4, 1), ABSTAIN);
        assert_eq!(matrix.get(0, 1), ABSTAIN);
    }

    #[test]
    fn applying_twice_is_identical() {
        let corpus = corpus2();
        let lf = LabelingFunction::semantic_type("LF_dict", fever_tcm(), true);
        let v1 = lf.apply_tokens(&corpus.documents[0], &schema2()).unwrap();
        let v2 = lf.apply_tokens(&corpus.documents[0], &schema2()).unwrap();
        assert_eq!(v1, v2);
    }

    #[test]
    fn binary_round_trip() {
        let corpus = corpus2();
        let lfs = vec![LabelingFunction::semantic_type("LF_dict", fever_tcm(), false)];
        let (matrix, _) = build_label_matrix(&corpus, &lfs, &schema2()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("votes.matrix");
        matrix.write_binary(&path).unwrap();
        let back = LabelMatrix::read_binary(&path).unwrap();
        assert_eq!(matrix, back);
    }

    #[test]
    fn bad_pattern_is_a_load_time_error() {
        assert!(LabelingFunction::pattern("bad", &["([".to_string()], 1).is_err());
    }

    mod props {
        use super::super::matrix::{LabelMatrix, RowRef};
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn matrix_binary_round_trips(
                rows in proptest::collection::vec(
                    proptest::collection::vec(-1i8..4, 3), 1..30),
            ) {
                let n = rows.len();
                let matrix = LabelMatrix {
                    n,
                    m: 3,
                    values: rows.iter().flatten().copied().collect(),
                    source_names: vec!["a".into(), "b".into(), "c".into()],
                    rows: (0..n).map(|i| RowRef { doc: i % 2, sentence: 0, token: i }).collect(),
                    doc_ids: vec!["d0".into(), "d1".into()],
                };
                let dir = tempfile::tempdir().unwrap();
                let path = dir.path().join("m.matrix");
                matrix.write_binary(&path).unwrap();
                let back = LabelMatrix::read_binary(&path).unwrap();
                prop_assert_eq!(&matrix.values, &back.values);
                prop_assert_eq!(&matrix.source_names, &back.source_names);
                // doc ids are preserved per row (the sidecar only lists
                // documents that actually appear)
                for (a, b) in matrix.rows.iter().zip(&back.rows) {
                    prop_assert_eq!(&matrix.doc_ids[a.doc], &back.doc_ids[b.doc]);
                    prop_assert_eq!((a.sentence, a.token), (b.sentence, b.token));
                }
            }
        }
    }
}
