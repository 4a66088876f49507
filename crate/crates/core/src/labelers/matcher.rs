//! Token-level labeling functions driven by dictionaries and regular
//! expressions.

use std::collections::{BTreeMap, BTreeSet};

use regex::Regex;

use crate::corpus::{ABSTAIN, Document, Token};
use crate::ontology::{TermClassMap, longest_matches, normalized_sentence_tokens};

/// Greedy longest-match dictionary votes: each matched span's tokens take
/// the argmax of the term's class vector; exact vector ties abstain (the
/// span is still consumed). With `slot_patterns` enabled, a match followed
/// by `( match )` or `- match` of the same class labels the full composed
/// span, parentheses included.
pub fn apply_semantic_type_lf(
    tcm: &TermClassMap,
    tokens: &[Token],
    slot_patterns: bool,
) -> Vec<i8> {
    let norm = normalized_sentence_tokens(tokens);
    let n = norm.len();
    let mut votes = vec![ABSTAIN; n];
    let spans = longest_matches(&norm, tcm.max_token_length, |k| tcm.contains(k));
    let matches: Vec<(usize, usize, Option<usize>)> = spans
        .iter()
        .map(|&(a, b)| (a, b, tcm.argmax_class(&norm[a..b].join(" "))))
        .collect();

    let mut composed: Vec<(usize, usize, usize)> = Vec::new();
    if slot_patterns {
        for pair in matches.windows(2) {
            let (a1, b1, c1) = pair[0];
            let (a2, b2, c2) = pair[1];
            let (Some(c1), Some(c2)) = (c1, c2) else { continue };
            if c1 != c2 {
                continue;
            }
            // {*} ( {*} )
            if b1 + 1 == a2
                && tokens[b1].text == "("
                && b2 < n
                && tokens[b2].text == ")"
            {
                composed.push((a1, b2 + 1, c1));
            }
            // {*} - {*}
            if b1 + 1 == a2 && tokens[b1].text == "-" {
                composed.push((a1, b2, c1));
            }
        }
    }

    for (a, b, class) in &matches {
        if let Some(c) = class {
            for v in votes.iter_mut().take(*b).skip(*a) {
                *v = *c as i8;
            }
        }
    }
    for (a, b, c) in composed {
        for v in votes.iter_mut().take(b).skip(a) {
            *v = c as i8;
        }
    }
    votes
}

/// Sentence text together with per-token character ranges relative to the
/// sentence start, for snapping regex matches onto tokens.
pub(crate) struct SentenceText {
    pub text: String,
    /// (char_start, char_end) of each token, relative to `text`.
    pub token_ranges: Vec<(usize, usize)>,
    /// Byte offset of each char in `text`, for regex byte->char mapping.
    byte_offsets: Vec<usize>,
}

impl SentenceText {
    pub fn of(doc: &Document, sentence: usize) -> SentenceText {
        let tokens = &doc.sentences[sentence].tokens;
        let base = tokens.first().map(|t| t.char_start).unwrap_or(0);
        let end = tokens.last().map(|t| t.char_end).unwrap_or(0);
        let chars: Vec<char> = doc.text.chars().collect();
        let text: String = chars[base..end].iter().collect();
        let token_ranges = tokens
            .iter()
            .map(|t| (t.char_start - base, t.char_end - base))
            .collect();
        let mut byte_offsets = Vec::with_capacity(end - base);
        for (b, _) in text.char_indices() {
            byte_offsets.push(b);
        }
        SentenceText { text, token_ranges, byte_offsets }
    }

    pub fn byte_to_char(&self, byte: usize) -> usize {
        self.byte_offsets.partition_point(|&b| b < byte)
    }

    /// Token indices whose character range intersects `[cs, ce)`.
    pub fn covering_tokens(&self, cs: usize, ce: usize) -> Vec<usize> {
        self.token_ranges
            .iter()
            .enumerate()
            .filter(|&(_, &(ts, te))| ts < ce && cs < te)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Regex labeling function: any token covered by a match votes `label`.
pub fn apply_pattern_lf(
    patterns: &[Regex],
    label: usize,
    doc: &Document,
    sentence: usize,
) -> Vec<i8> {
    let tokens = &doc.sentences[sentence].tokens;
    let mut votes = vec![ABSTAIN; tokens.len()];
    let st = SentenceText::of(doc, sentence);
    for re in patterns {
        for m in re.find_iter(&st.text) {
            let cs = st.byte_to_char(m.start());
            let ce = st.byte_to_char(m.end());
            for t in st.covering_tokens(cs, ce) {
                votes[t] = label as i8;
            }
        }
    }
    votes
}

fn is_punctuation_token(tok: &str) -> bool {
    !tok.chars().any(char::is_alphanumeric)
}

fn is_number_token(tok: &str) -> bool {
    tok.chars().any(|c| c.is_ascii_digit()) && !tok.chars().any(char::is_alphabetic)
}

/// Longest-match over explicit positive/negative example dictionaries.
/// Positive hits vote `positive_class`, negative hits vote the default
/// class, and stopword/number/punctuation tokens also vote the default
/// class (each switchable, so the guidelines tier can be split into
/// separate sources). Everything else abstains.
#[allow(clippy::too_many_arguments)]
pub fn apply_guideline_dict_lf(
    positive: &BTreeMap<String, ()>,
    negative: &BTreeMap<String, ()>,
    tokens: &[Token],
    positive_class: usize,
    default_class: usize,
    stopwords: &BTreeSet<String>,
    vote_stopwords: bool,
    vote_punct_numbers: bool,
) -> Vec<i8> {
    let norm = normalized_sentence_tokens(tokens);
    let n = norm.len();
    let mut votes = vec![ABSTAIN; n];
    let max_len = positive
        .keys()
        .chain(negative.keys())
        .map(|k| k.split(' ').count())
        .max()
        .unwrap_or(0);
    if max_len > 0 {
        let spans = longest_matches(&norm, max_len, |k| {
            positive.contains_key(k) || negative.contains_key(k)
        });
        for (a, b) in spans {
            let key = norm[a..b].join(" ");
            let class = if positive.contains_key(&key) { positive_class } else { default_class };
            for v in votes.iter_mut().take(b).skip(a) {
                *v = class as i8;
            }
        }
    }
    for (i, tok) in norm.iter().enumerate() {
        if votes[i] != ABSTAIN {
            continue;
        }
        let punct_num = vote_punct_numbers && (is_punctuation_token(tok) || is_number_token(tok));
        let stop = vote_stopwords && stopwords.contains(&tok.to_lowercase());
        if punct_num || stop {
            votes[i] = default_class as i8;
        }
    }
    votes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, TaskSchema};
    use crate::ontology::{ClassMap, Terminology, build_term_class_map, default_stopwords};

    fn schema2() -> TaskSchema {
        TaskSchema::binary("ENT")
    }

    fn tcm_of(entries: &[(&str, &str)], classes: &[(&str, Option<usize>)]) -> TermClassMap {
        let mut t = Terminology::new("t");
        for (term, sty) in entries {
            t.insert(term, sty);
        }
        let cm = ClassMap::new(classes.iter().map(|(k, v)| (k.to_string(), *v)).collect());
        build_term_class_map(&[t], &cm, &schema2()).unwrap()
    }

    #[test]
    fn longest_match_wins_over_nested_term() {
        let tcm = tcm_of(
            &[("lung", "ANAT"), ("lung cancer", "DISO")],
            &[("ANAT", None), ("DISO", Some(1))],
        );
        let doc = Document::new("d", "lung cancer");
        let votes = apply_semantic_type_lf(&tcm, &doc.sentences[0].tokens, false);
        assert_eq!(votes, vec![1, 1]);
    }

    #[test]
    fn no_dictionary_term_all_abstain() {
        let tcm = tcm_of(&[("fever", "DISO")], &[("DISO", Some(1))]);
        let doc = Document::new("d", "nothing to see here");
        let votes = apply_semantic_type_lf(&tcm, &doc.sentences[0].tokens, false);
        assert!(votes.iter().all(|&v| v == ABSTAIN));
    }

    #[test]
    fn slot_pattern_labels_parenthetical_compound() {
        let tcm = tcm_of(
            &[("Tylenol", "DRUG"), ("Acetaminophen", "DRUG")],
            &[("DRUG", Some(1))],
        );
        let doc = Document::new("d", "Tylenol ( Acetaminophen )");
        let tokens = &doc.sentences[0].tokens;
        assert_eq!(tokens.len(), 4);
        let votes = apply_semantic_type_lf(&tcm, tokens, true);
        assert_eq!(votes, vec![1, 1, 1, 1]);
        // without slot patterns the parens abstain
        let votes = apply_semantic_type_lf(&tcm, tokens, false);
        assert_eq!(votes, vec![1, -1, 1, -1]);
    }

    #[test]
    fn tied_vector_abstains_but_consumes_span() {
        let tcm = tcm_of(
            &[("scan", "DISO"), ("scan", "PROC")],
            &[("DISO", Some(1)), ("PROC", Some(0))],
        );
        let doc = Document::new("d", "scan today");
        let votes = apply_semantic_type_lf(&tcm, &doc.sentences[0].tokens, false);
        assert_eq!(votes, vec![ABSTAIN, ABSTAIN]);
    }

    #[test]
    fn no_token_gets_two_span_assignments() {
        let tcm = tcm_of(
            &[("chest pain", "DISO"), ("pain", "DISO"), ("chest", "ANAT")],
            &[("DISO", Some(1)), ("ANAT", None)],
        );
        let doc = Document::new("d", "severe chest pain today");
        let norm = normalized_sentence_tokens(&doc.sentences[0].tokens);
        let spans = longest_matches(&norm, tcm.max_token_length, |k| tcm.contains(k));
        let mut covered = vec![0usize; norm.len()];
        for (a, b) in spans {
            for c in covered.iter_mut().take(b).skip(a) {
                *c += 1;
            }
        }
        assert!(covered.iter().all(|&c| c <= 1));
    }

    #[test]
    fn pattern_lf_snaps_to_covering_tokens() {
        let re = vec![Regex::new(r"(ACEi|ACE inhibitor[s]*)").unwrap()];
        let doc = Document::new("d", "an ACE inhibitor today");
        let votes = apply_pattern_lf(&re, 1, &doc, 0);
        assert_eq!(votes, vec![-1, 1, 1, -1]);
    }

    #[test]
    fn pattern_lf_negative_class() {
        let re = vec![Regex::new(r"\b(anti[a-z]+)\b").unwrap()];
        let doc = Document::new("d", "an antibody result");
        let votes = apply_pattern_lf(&re, 0, &doc, 0);
        assert_eq!(votes, vec![-1, 0, -1]);
    }

    #[test]
    fn pattern_lf_without_match_abstains() {
        let re = vec![Regex::new(r"zzz").unwrap()];
        let doc = Document::new("d", "an antibody result");
        let votes = apply_pattern_lf(&re, 1, &doc, 0);
        assert!(votes.iter().all(|&v| v == ABSTAIN));
    }

    fn dict(terms: &[&str]) -> BTreeMap<String, ()> {
        terms.iter().map(|t| (crate::ontology::normalize_term(t), ())).collect()
    }

    #[test]
    fn guideline_positive_and_negative_votes() {
        let stop = default_stopwords();
        let doc = Document::new("d", "chest pain syndrome , 42");
        let votes = apply_guideline_dict_lf(
            &dict(&["chest pain"]),
            &dict(&["syndrome"]),
            &doc.sentences[0].tokens,
            1,
            0,
            &stop,
            true,
            true,
        );
        // chest pain -> 1 1; syndrome -> 0; "," punctuation -> 0; 42 number -> 0
        assert_eq!(votes, vec![1, 1, 0, 0, 0]);
    }

    #[test]
    fn guideline_stopwords_vote_default() {
        let stop = default_stopwords();
        let doc = Document::new("d", "the fever");
        let votes = apply_guideline_dict_lf(
            &dict(&["rash"]),
            &dict(&[]),
            &doc.sentences[0].tokens,
            1,
            0,
            &stop,
            true,
            true,
        );
        assert_eq!(votes, vec![0, -1]);
        let votes = apply_guideline_dict_lf(
            &dict(&["rash"]),
            &dict(&[]),
            &doc.sentences[0].tokens,
            1,
            0,
            &stop,
            false,
            false,
        );
        assert_eq!(votes, vec![-1, -1]);
    }
}
