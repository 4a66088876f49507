//! Span-level labeling functions: context-window cue rules (the
//! NegEx/ConText strategy) and document-relative time votes keyed on the
//! nearest explicit datetime mention.

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

use crate::corpus::{ABSTAIN, Document};
use crate::dates::Date;
use crate::error::{Error, Result};
use crate::labelers::matcher::SentenceText;

/// A pre-identified entity: token span `[start, end)` within one sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitySpan {
    pub sentence: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Left,
    Right,
    Both,
}

/// Scan a fixed window of tokens around an entity for cue phrases,
/// stopping at sentence boundaries and terminator phrases.
#[derive(Debug, Clone)]
pub struct CueRule {
    pub patterns: Vec<Regex>,
    pub direction: Direction,
    pub window: usize,
    pub label: usize,
    pub terminators: Vec<String>,
}

impl CueRule {
    pub fn new(
        patterns: &[String],
        direction: Direction,
        window: usize,
        label: usize,
        terminators: &[String],
    ) -> Result<CueRule> {
        if window == 0 {
            return Err(Error::config("cue window must be >= 1"));
        }
        let compiled = compile_case_insensitive(patterns)?;
        Ok(CueRule {
            patterns: compiled,
            direction,
            window,
            label,
            terminators: terminators.iter().map(|t| t.to_lowercase()).collect(),
        })
    }
}

pub fn compile_case_insensitive(patterns: &[String]) -> Result<Vec<Regex>> {
    patterns
        .iter()
        .map(|p| {
            RegexBuilder::new(p)
                .case_insensitive(true)
                .build()
                .map_err(|e| Error::config(format!("bad pattern `{p}`: {e}")))
        })
        .collect()
}

fn check_entity(doc: &Document, e: &EntitySpan) -> Result<()> {
    let ok = e.sentence < doc.sentences.len()
        && e.start < e.end
        && e.end <= doc.sentences[e.sentence].tokens.len();
    if ok {
        Ok(())
    } else {
        Err(Error::EntityOutOfBounds { doc_id: doc.id.clone(), start: e.start, end: e.end })
    }
}

/// True when some terminator phrase occupies sentence positions ending at
/// `p` (left scan) or starting at `p` (right scan).
fn terminator_at(lowered: &[String], p: usize, terminators: &[String], leftward: bool) -> bool {
    for t in terminators {
        let words: Vec<&str> = t.split_whitespace().collect();
        let len = words.len();
        if len == 0 {
            continue;
        }
        let range = if leftward {
            let Some(start) = (p + 1).checked_sub(len) else { continue };
            start..p + 1
        } else {
            if p + len > lowered.len() {
                continue;
            }
            p..p + len
        };
        if lowered[range].iter().map(String::as_str).eq(words.iter().copied()) {
            return true;
        }
    }
    false
}

/// One vote per entity: the rule's label when a cue phrase matches inside
/// the scanned window, abstain otherwise.
pub fn apply_cue_window_lf(
    rule: &CueRule,
    doc: &Document,
    entities: &[EntitySpan],
) -> Result<Vec<i8>> {
    let mut votes = Vec::with_capacity(entities.len());
    for e in entities {
        check_entity(doc, e)?;
        let tokens = &doc.sentences[e.sentence].tokens;
        let lowered: Vec<String> = tokens.iter().map(|t| t.text.to_lowercase()).collect();

        let mut window_tokens: Vec<&str> = Vec::new();
        if matches!(rule.direction, Direction::Left | Direction::Both) {
            let mut collected = Vec::new();
            let mut p = e.start;
            for _ in 0..rule.window {
                if p == 0 {
                    break;
                }
                p -= 1;
                if terminator_at(&lowered, p, &rule.terminators, true) {
                    break;
                }
                collected.push(tokens[p].text.as_str());
            }
            collected.reverse();
            window_tokens.extend(collected);
        }
        if matches!(rule.direction, Direction::Right | Direction::Both) {
            for p in (e.end..tokens.len()).take(rule.window) {
                if terminator_at(&lowered, p, &rule.terminators, false) {
                    break;
                }
                window_tokens.push(tokens[p].text.as_str());
            }
        }

        let text = window_tokens.join(" ");
        let hit = rule.patterns.iter().any(|re| re.is_match(&text));
        votes.push(if hit { rule.label as i8 } else { ABSTAIN });
    }
    Ok(votes)
}

/// Configuration for document-relative time votes.
#[derive(Debug, Clone)]
pub struct DatetimeRule {
    pub timex_patterns: Vec<Regex>,
    pub past_headers: Vec<Regex>,
    pub before_class: usize,
    pub overlap_class: usize,
    pub after_class: usize,
}

pub fn default_timex_patterns() -> Vec<String> {
    const MONTHS: &str = "January|February|March|April|May|June|July|August|September|October|November|December|Jan|Feb|Mar|Apr|Jun|Jul|Aug|Sep|Sept|Oct|Nov|Dec";
    vec![
        r"\b\d{4}-\d{2}-\d{2}\b".to_string(),
        r"\b\d{1,2}/\d{1,2}(/\d{2,4})?\b".to_string(),
        format!(r"\b({MONTHS})\.?\s+\d{{1,2}}(,\s*\d{{4}})?\b"),
        format!(r"\b\d{{1,2}}\s+({MONTHS})\.?(\s+\d{{4}})?\b"),
    ]
}

pub fn default_past_header_patterns() -> Vec<String> {
    vec![
        r"(?i)past medical history\s*:".to_string(),
        r"(?i)\bpmh\s*:".to_string(),
        r"(?i)\bsurgical history\s*:".to_string(),
    ]
}

impl DatetimeRule {
    pub fn new(
        timex_patterns: &[String],
        past_headers: &[String],
        before_class: usize,
        overlap_class: usize,
        after_class: usize,
    ) -> Result<DatetimeRule> {
        Ok(DatetimeRule {
            timex_patterns: compile_case_insensitive(timex_patterns)?,
            past_headers: compile_case_insensitive(past_headers)?,
            before_class,
            overlap_class,
            after_class,
        })
    }
}

/// Any line-leading `Some Header:` construction, used to delimit sections.
fn generic_header_regex() -> Regex {
    Regex::new(r"(?m)^[ \t]*[A-Za-z][A-Za-z /]{1,40}:").unwrap()
}

/// Per-entity document-relative time votes. The nearest parseable datetime
/// mention in the entity's sentence decides before/overlap/after against
/// the document timestamp; entities under a past-history section header
/// vote before; otherwise abstain. Unparseable matched mentions are
/// skipped with a warning.
pub fn apply_nearest_datetime_lf(
    rule: &DatetimeRule,
    doc: &Document,
    entities: &[EntitySpan],
) -> Result<(Vec<i8>, Vec<String>)> {
    let doc_date: Date = doc.timestamp.ok_or_else(|| {
        Error::config(format!("document `{}` has no timestamp for datetime voting", doc.id))
    })?;
    let mut warnings = Vec::new();

    // datetime mentions per sentence: (first token, last token, date)
    let mut mentions: Vec<Vec<(usize, usize, Date)>> = Vec::with_capacity(doc.sentences.len());
    for si in 0..doc.sentences.len() {
        let st = SentenceText::of(doc, si);
        let mut found = Vec::new();
        for re in &rule.timex_patterns {
            for m in re.find_iter(&st.text) {
                let cs = st.byte_to_char(m.start());
                let ce = st.byte_to_char(m.end());
                let covering = st.covering_tokens(cs, ce);
                let (Some(&first), Some(&last)) = (covering.first(), covering.last()) else {
                    continue;
                };
                match Date::parse_mention(m.as_str(), doc_date.year) {
                    Some(date) => found.push((first, last, date)),
                    None => warnings.push(format!(
                        "doc `{}` sentence {si}: unparseable datetime mention `{}`",
                        doc.id,
                        m.as_str()
                    )),
                }
            }
        }
        found.sort();
        found.dedup();
        mentions.push(found);
    }

    // past-history sections: entity position vs nearest preceding header
    let chars: Vec<char> = doc.text.chars().collect();
    let byte_offsets: Vec<usize> = doc.text.char_indices().map(|(b, _)| b).collect();
    let byte_to_char = |byte: usize| byte_offsets.partition_point(|&b| b < byte);
    let _ = chars;
    let generic = generic_header_regex();
    let mut headers: Vec<(usize, bool)> = Vec::new();
    for m in generic.find_iter(&doc.text) {
        headers.push((byte_to_char(m.start()), false));
    }
    for re in &rule.past_headers {
        for m in re.find_iter(&doc.text) {
            headers.push((byte_to_char(m.start()), true));
        }
    }
    headers.sort();

    let mut votes = Vec::with_capacity(entities.len());
    for e in entities {
        check_entity(doc, e)?;
        let sentence_mentions = &mentions[e.sentence];
        if !sentence_mentions.is_empty() {
            let nearest = sentence_mentions
                .iter()
                .min_by_key(|(first, last, _)| {
                    let d = match (first.checked_sub(e.end - 1), e.start.checked_sub(*last)) {
                        (Some(right), _) if *first >= e.end => right,
                        (_, Some(left)) if *last < e.start => left,
                        _ => 0,
                    };
                    (d, *first)
                })
                .unwrap();
            let date = nearest.2;
            let class = match date.cmp(&doc_date) {
                std::cmp::Ordering::Less => rule.before_class,
                std::cmp::Ordering::Equal => rule.overlap_class,
                std::cmp::Ordering::Greater => rule.after_class,
            };
            votes.push(class as i8);
            continue;
        }
        let entity_pos = doc.sentences[e.sentence].tokens[e.start].char_start;
        let preceding = headers.iter().rev().find(|(pos, _)| *pos <= entity_pos);
        match preceding {
            Some((pos, _)) => {
                // past header wins if any past match starts at this position
                let is_past = headers.iter().any(|(p, past)| p == pos && *past);
                votes.push(if is_past { rule.before_class as i8 } else { ABSTAIN });
            }
            None => votes.push(ABSTAIN),
        }
    }
    Ok((votes, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entity(sentence: usize, start: usize, end: usize) -> EntitySpan {
        EntitySpan { sentence, start, end }
    }

    fn negation_rule() -> CueRule {
        CueRule::new(
            &["no evidence of".to_string(), "denies".to_string()],
            Direction::Left,
            6,
            1,
            &["but".to_string()],
        )
        .unwrap()
    }

    #[test]
    fn cue_in_left_window_fires() {
        let doc = Document::new("d", "no evidence of pneumonia");
        let votes = apply_cue_window_lf(&negation_rule(), &doc, &[entity(0, 3, 4)]).unwrap();
        assert_eq!(votes, vec![1]);
    }

    #[test]
    fn no_cue_in_window_abstains() {
        let doc = Document::new("d", "patient has pneumonia");
        let votes = apply_cue_window_lf(&negation_rule(), &doc, &[entity(0, 2, 3)]).unwrap();
        assert_eq!(votes, vec![ABSTAIN]);
    }

    #[test]
    fn terminator_between_cue_and_entity_blocks() {
        let doc = Document::new("d", "no evidence of infection but pneumonia persists");
        // entity "pneumonia" at token 5; "but" at token 4 stops the leftward scan
        let votes = apply_cue_window_lf(&negation_rule(), &doc, &[entity(0, 5, 6)]).unwrap();
        assert_eq!(votes, vec![ABSTAIN]);
    }

    #[test]
    fn window_limit_is_respected() {
        let rule = CueRule::new(
            &["denies".to_string()],
            Direction::Left,
            2,
            1,
            &[],
        )
        .unwrap();
        let doc = Document::new("d", "denies any current acute pneumonia");
        // "denies" is 4 tokens left of the entity, outside window 2
        let votes = apply_cue_window_lf(&rule, &doc, &[entity(0, 4, 5)]).unwrap();
        assert_eq!(votes, vec![ABSTAIN]);
    }

    #[test]
    fn right_window_scans_forward() {
        let rule = CueRule::new(
            &["resolved".to_string()],
            Direction::Right,
            3,
            1,
            &[],
        )
        .unwrap();
        let doc = Document::new("d", "pneumonia has resolved");
        let votes = apply_cue_window_lf(&rule, &doc, &[entity(0, 0, 1)]).unwrap();
        assert_eq!(votes, vec![1]);
    }

    #[test]
    fn entity_out_of_bounds_is_an_error() {
        let doc = Document::new("d", "short sentence");
        let err = apply_cue_window_lf(&negation_rule(), &doc, &[entity(0, 5, 6)]);
        assert!(matches!(err, Err(Error::EntityOutOfBounds { .. })));
    }

    fn dt_rule() -> DatetimeRule {
        DatetimeRule::new(
            &default_timex_patterns(),
            &default_past_header_patterns(),
            1,
            2,
            3,
        )
        .unwrap()
    }

    fn dated_doc(text: &str) -> Document {
        let mut doc = Document::new("d", text);
        doc.timestamp = Date::parse_iso("2020-03-15");
        doc
    }

    #[test]
    fn explicit_date_before_timestamp_votes_before() {
        let doc = dated_doc("On 3/14 developed fever");
        // entity "fever" at token 3
        let (votes, warnings) = apply_nearest_datetime_lf(&dt_rule(), &doc, &[entity(0, 3, 4)]).unwrap();
        assert_eq!(votes, vec![1]);
        assert!(warnings.is_empty());
    }

    #[test]
    fn same_day_votes_overlap_and_later_votes_after() {
        let doc = dated_doc("On 3/15 fever began");
        let (votes, _) = apply_nearest_datetime_lf(&dt_rule(), &doc, &[entity(0, 2, 3)]).unwrap();
        assert_eq!(votes, vec![2]);
        let doc = dated_doc("Follow up on 2020-04-01 for fever");
        let (votes, _) = apply_nearest_datetime_lf(&dt_rule(), &doc, &[entity(0, 5, 6)]).unwrap();
        assert_eq!(votes, vec![3]);
    }

    #[test]
    fn nearest_mention_in_token_distance_wins() {
        let doc = dated_doc("On 3/10 well but fever since 3/20");
        // entity "fever" token 4; 3/20 (token 6) is nearer than 3/10 (token 1)
        let (votes, _) = apply_nearest_datetime_lf(&dt_rule(), &doc, &[entity(0, 4, 5)]).unwrap();
        assert_eq!(votes, vec![3]);
    }

    #[test]
    fn past_history_header_votes_before() {
        let doc = dated_doc("past medical history: asthma and colitis");
        let (votes, _) = apply_nearest_datetime_lf(&dt_rule(), &doc, &[entity(0, 4, 5)]).unwrap();
        assert_eq!(votes, vec![1]);
    }

    #[test]
    fn other_section_header_blocks_past_vote() {
        let doc = dated_doc("Past medical history: copd\nCurrent complaint: fever today");
        let (votes, _) =
            apply_nearest_datetime_lf(&dt_rule(), &doc, &[entity(1, 3, 4), entity(0, 4, 5)]).unwrap();
        assert_eq!(votes, vec![ABSTAIN, 1]);
    }

    #[test]
    fn no_date_no_header_abstains() {
        let doc = dated_doc("fever without any timing");
        let (votes, _) = apply_nearest_datetime_lf(&dt_rule(), &doc, &[entity(0, 0, 1)]).unwrap();
        assert_eq!(votes, vec![ABSTAIN]);
    }

    #[test]
    fn unparseable_datetime_mention_warns_and_skips() {
        // "19/55" matches the numeric pattern but is not a calendar date
        let doc = dated_doc("seen 19/55 fever");
        let (votes, warnings) =
            apply_nearest_datetime_lf(&dt_rule(), &doc, &[entity(0, 2, 3)]).unwrap();
        assert_eq!(votes, vec![ABSTAIN]);
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("19/55"), "{}", warnings[0]);
    }

    #[test]
    fn missing_timestamp_is_an_error() {
        let doc = Document::new("d", "fever on 3/14");
        assert!(apply_nearest_datetime_lf(&dt_rule(), &doc, &[entity(0, 0, 1)]).is_err());
    }
}
