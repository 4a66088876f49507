//! Synonym-set labeling functions: a synset fires only when more than one
//! distinct member term occurs in a document (`any_pair`), or when a
//! short-form/long-form pair is detected by Schwartz-Hearst letter
//! alignment and the short form inherits the long form's class.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{ABSTAIN, Document};
use crate::ontology::{
    SynsetIndex, TermClassMap, argmax_unique, longest_matches, normalize_term,
    normalized_sentence_tokens,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynsetMode {
    AnyPair,
    SchwartzHearst,
}

/// Consensus class of a synset: argmax of the summed class vectors of the
/// members present in the term-class map. `None` when no member is mapped
/// or the sum ties.
fn synset_class(members: &std::collections::BTreeSet<String>, tcm: &TermClassMap) -> Option<usize> {
    let mut sum: Option<Vec<f64>> = None;
    for m in members {
        if let Some(vec) = tcm.get(m) {
            let acc = sum.get_or_insert_with(|| vec![0.0; vec.len()]);
            for (a, v) in acc.iter_mut().zip(vec) {
                *a += v;
            }
        }
    }
    argmax_unique(&sum?)
}

fn assign(votes: &mut [i8], range: std::ops::Range<usize>, class: usize) {
    for v in &mut votes[range] {
        let c = class as i8;
        if *v == ABSTAIN || *v == c {
            *v = c;
        } else {
            // conflicting synsets on one token: withdraw the vote
            *v = ABSTAIN;
        }
    }
}

pub fn apply_synset_lf(
    index: &SynsetIndex,
    tcm: &TermClassMap,
    doc: &Document,
    mode: SynsetMode,
) -> Vec<Vec<i8>> {
    match mode {
        SynsetMode::AnyPair => apply_any_pair(index, tcm, doc),
        SynsetMode::SchwartzHearst => apply_schwartz_hearst(tcm, doc),
    }
}

fn apply_any_pair(index: &SynsetIndex, tcm: &TermClassMap, doc: &Document) -> Vec<Vec<i8>> {
    let mut votes: Vec<Vec<i8>> = doc
        .sentences
        .iter()
        .map(|s| vec![ABSTAIN; s.tokens.len()])
        .collect();
    let max_len = index.max_token_length();
    if max_len == 0 {
        return votes;
    }

    // one matching pass over the document, shared by all synsets
    let mut occurrences: Vec<(usize, usize, usize, String)> = Vec::new();
    for (si, sent) in doc.sentences.iter().enumerate() {
        let norm = normalized_sentence_tokens(&sent.tokens);
        for (a, b) in longest_matches(&norm, max_len, |k| index.term_to_synsets.contains_key(k)) {
            occurrences.push((si, a, b, norm[a..b].join(" ")));
        }
    }

    for (id, members) in &index.synsets {
        let present: std::collections::BTreeSet<&String> = occurrences
            .iter()
            .filter(|(_, _, _, key)| members.contains(key))
            .map(|(_, _, _, key)| key)
            .collect();
        if present.len() < 2 {
            continue;
        }
        let Some(class) = synset_class(members, tcm) else { continue };
        let _ = id;
        for (si, a, b, key) in &occurrences {
            if members.contains(key) {
                assign(&mut votes[*si], *a..*b, class);
            }
        }
    }
    votes
}

/// Schwartz-Hearst candidate constraints on a short form.
fn valid_short_form(sf: &str) -> bool {
    let n_chars = sf.chars().count();
    let n_words = sf.split_whitespace().count();
    (2..=10).contains(&n_chars)
        && n_words <= 2
        && sf.chars().any(char::is_alphabetic)
        && sf.chars().next().is_some_and(char::is_alphanumeric)
}

/// The published right-to-left letter alignment: walk the short form from
/// its last character, locating each character in the long-form candidate,
/// and require the first character to start a word. Returns the matched
/// suffix of the candidate.
pub fn find_best_long_form(candidate: &str, short_form: &str) -> Option<String> {
    let l: Vec<char> = candidate.chars().collect();
    let s: Vec<char> = short_form.chars().collect();
    let mut l_index = l.len() as isize - 1;
    let mut s_index = s.len() as isize - 1;
    while s_index >= 0 {
        let curr = s[s_index as usize].to_lowercase().next().unwrap();
        if !curr.is_alphanumeric() {
            s_index -= 1;
            continue;
        }
        loop {
            let mismatch = l_index >= 0
                && l[l_index as usize].to_lowercase().next().unwrap() != curr;
            let not_word_start = s_index == 0
                && l_index > 0
                && l[(l_index - 1) as usize].is_alphanumeric();
            if l_index >= 0 && (mismatch || not_word_start) {
                l_index -= 1;
            } else {
                break;
            }
        }
        if l_index < 0 {
            return None;
        }
        l_index -= 1;
        s_index -= 1;
    }
    let from = (l_index + 1) as usize;
    let start = l[..from].iter().rposition(|&c| c == ' ').map(|p| p + 1).unwrap_or(0);
    Some(l[start..].iter().collect())
}

/// (short form, long form) pairs found in parenthetical constructions, in
/// canonical term form.
pub fn schwartz_hearst_pairs(doc: &Document) -> Vec<(String, String)> {
    let mut pairs = Vec::new();
    for sent in &doc.sentences {
        let toks = &sent.tokens;
        for p in 0..toks.len() {
            if toks[p].text != "(" {
                continue;
            }
            let Some(q_rel) = toks[p + 1..].iter().position(|t| t.text == ")") else { continue };
            let q = p + 1 + q_rel;
            if q == p + 1 {
                continue;
            }
            let inner: Vec<&str> = toks[p + 1..q].iter().map(|t| t.text.as_str()).collect();
            let inner_text = inner.join(" ");
            if inner.len() <= 2 && valid_short_form(&inner_text) {
                // short form inside the parentheses, long form before them
                let sf = inner_text;
                let sf_len = sf.chars().count();
                let max_words = (sf_len + 5).min(sf_len * 2);
                let lo = p.saturating_sub(max_words);
                let candidate: Vec<&str> = toks[lo..p].iter().map(|t| t.text.as_str()).collect();
                if candidate.is_empty() {
                    continue;
                }
                if let Some(lf) = find_best_long_form(&candidate.join(" "), &sf) {
                    pairs.push((normalize_term(&sf), normalize_term(&lf)));
                }
            } else if p > 0 {
                // long form inside the parentheses, short form just before
                let sf = toks[p - 1].text.clone();
                if valid_short_form(&sf)
                    && let Some(lf) = find_best_long_form(&inner_text, &sf)
                {
                    pairs.push((normalize_term(&sf), normalize_term(&lf)));
                }
            }
        }
    }
    pairs
}

fn apply_schwartz_hearst(tcm: &TermClassMap, doc: &Document) -> Vec<Vec<i8>> {
    let mut votes: Vec<Vec<i8>> = doc
        .sentences
        .iter()
        .map(|s| vec![ABSTAIN; s.tokens.len()])
        .collect();
    // short form -> class inherited from the long form
    let mut inherited: BTreeMap<String, usize> = BTreeMap::new();
    for (sf, lf) in schwartz_hearst_pairs(doc) {
        if let Some(class) = tcm.argmax_class(&lf) {
            inherited.insert(sf, class);
        }
    }
    if inherited.is_empty() {
        return votes;
    }
    let max_len = inherited.keys().map(|k| k.split(' ').count()).max().unwrap_or(0);
    for (si, sent) in doc.sentences.iter().enumerate() {
        let norm = normalized_sentence_tokens(&sent.tokens);
        for (a, b) in longest_matches(&norm, max_len, |k| inherited.contains_key(k)) {
            let class = inherited[&norm[a..b].join(" ")];
            assign(&mut votes[si], a..b, class);
        }
    }
    votes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TaskSchema;
    use crate::ontology::{ClassMap, Terminology, build_synsets_str, build_term_class_map};
    use std::path::Path;

    fn tcm_of(entries: &[(&str, &str)], classes: &[(&str, Option<usize>)]) -> TermClassMap {
        let mut t = Terminology::new("t");
        for (term, sty) in entries {
            t.insert(term, sty);
        }
        let cm = ClassMap::new(classes.iter().map(|(k, v)| (k.to_string(), *v)).collect());
        build_term_class_map(&[t], &cm, &TaskSchema::binary("ENT")).unwrap()
    }

    fn disease_tcm() -> TermClassMap {
        tcm_of(&[("Duchenne muscular dystrophy", "DISO")], &[("DISO", Some(1))])
    }

    fn dmd_index() -> SynsetIndex {
        build_synsets_str("C1\tDuchenne muscular dystrophy\nC1\tDMD\n", Path::new("mem")).unwrap()
    }

    #[test]
    fn any_pair_fires_when_two_members_occur() {
        let doc = Document::new("d", "Duchenne muscular dystrophy suspected\nDMD confirmed later");
        let votes = apply_synset_lf(&dmd_index(), &disease_tcm(), &doc, SynsetMode::AnyPair);
        assert_eq!(votes[0], vec![1, 1, 1, -1]);
        assert_eq!(votes[1], vec![1, -1, -1]);
    }

    #[test]
    fn any_pair_abstains_on_single_member() {
        let doc = Document::new("d", "DMD confirmed later");
        let votes = apply_synset_lf(&dmd_index(), &disease_tcm(), &doc, SynsetMode::AnyPair);
        assert!(votes[0].iter().all(|&v| v == ABSTAIN));
    }

    #[test]
    fn long_form_alignment_walks_right_to_left() {
        assert_eq!(
            find_best_long_form("myocardial infarction", "MI").as_deref(),
            Some("myocardial infarction")
        );
        assert_eq!(
            find_best_long_form("acute myocardial infarction", "MI").as_deref(),
            Some("myocardial infarction")
        );
        assert_eq!(
            find_best_long_form("Duchenne muscular dystrophy", "DMD").as_deref(),
            Some("Duchenne muscular dystrophy")
        );
        // "heart attack" shares no letters with "MI": the walk exhausts the
        // candidate and the pair is rejected
        assert_eq!(find_best_long_form("heart attack", "MI"), None);
        // first character must start a word
        assert_eq!(find_best_long_form("gastric ulcer", "RIC"), None);
    }

    #[test]
    fn schwartz_hearst_pairs_in_both_directions() {
        let doc = Document::new("d", "acute myocardial infarction ( MI ) today");
        let pairs = schwartz_hearst_pairs(&doc);
        assert_eq!(pairs, vec![("MI".to_string(), "myocardial infarction".to_string())]);

        let doc = Document::new("d", "MI ( myocardial infarction ) today");
        let pairs = schwartz_hearst_pairs(&doc);
        assert_eq!(pairs, vec![("MI".to_string(), "myocardial infarction".to_string())]);
    }

    #[test]
    fn short_form_inherits_long_form_class_everywhere() {
        let tcm = tcm_of(&[("myocardial infarction", "DISO")], &[("DISO", Some(1))]);
        let doc = Document::new("d", "myocardial infarction ( MI ) noted\nprior MI in 2019");
        let votes = apply_synset_lf(&SynsetIndex::default(), &tcm, &doc, SynsetMode::SchwartzHearst);
        // only the short form inherits; the long form is left to dictionary LFs
        assert_eq!(votes[0], vec![-1, -1, -1, 1, -1, -1]);
        assert_eq!(votes[1], vec![-1, 1, -1, -1]);
    }

    #[test]
    fn no_alignment_no_votes_even_when_long_form_in_dict() {
        // hand-run of the published alignment on "heart attack (MI)": the
        // walk looks for `i` then `m` in "heart attack", finds neither, and
        // rejects the pair, so nothing is labeled in either mode.
        let tcm = tcm_of(&[("heart attack", "DISO")], &[("DISO", Some(1))]);
        let doc = Document::new("d", "heart attack ( MI ) today and MI again");
        let votes = apply_synset_lf(&SynsetIndex::default(), &tcm, &doc, SynsetMode::SchwartzHearst);
        let mi_positions = [3usize, 6];
        for p in mi_positions {
            assert_eq!(votes[0][p], ABSTAIN);
        }
    }
}
