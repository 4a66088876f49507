//! Ground-truth oracle: corpora with known tags and simulated labeling
//! sources with specified accuracies and coverages, so every quantitative
//! claim can be checked without licensed data.
//!
//! Entity surface forms are built from class-marked words (`e1t7`), while
//! background words are random lowercase strings, so a trained classifier
//! can generalize through prefix/shape features. A fixed 20% of entity
//! forms are flagged out-of-dictionary: they appear in text and gold
//! labels but are withheld from every dictionary handed to labeling
//! functions.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{ABSTAIN, Corpus, Document, GoldSpan, TaskSchema, align_gold};
use crate::error::Result;
use crate::labelers::matrix::{LabelMatrix, RowRef};
use crate::ontology::Terminology;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMode {
    /// Wrong votes are uniform over the other classes.
    UniformFlip,
    /// Entity spans are voted as wholes; errors truncate one boundary
    /// token to the default class, emulating partial-span dictionary
    /// misses.
    SpanTruncate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub accuracy: f64,
    pub coverage: f64,
    pub error_mode: ErrorMode,
}

impl SourceSpec {
    pub fn flip(accuracy: f64, coverage: f64) -> SourceSpec {
        SourceSpec { accuracy, coverage, error_mode: ErrorMode::UniformFlip }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityForm {
    /// Space-joined surface tokens.
    pub text: String,
    pub class: usize,
    /// Withheld from all dictionaries handed to labeling functions.
    pub out_of_dictionary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTask {
    pub schema: TaskSchema,
    pub corpus: Corpus,
    pub vocabulary: Vec<String>,
    pub entity_lexicon: Vec<EntityForm>,
    pub seed: u64,
}

impl SyntheticTask {
    pub fn in_dictionary_forms(&self) -> Vec<&EntityForm> {
        self.entity_lexicon.iter().filter(|f| !f.out_of_dictionary).collect()
    }

    pub fn out_of_dictionary_forms(&self) -> Vec<&EntityForm> {
        self.entity_lexicon.iter().filter(|f| f.out_of_dictionary).collect()
    }

    /// Gold IO tags for every token in corpus row order.
    pub fn flat_gold_tags(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.corpus.num_tokens());
        for doc in &self.corpus.documents {
            let spans: Vec<GoldSpan> = self
                .corpus
                .gold_spans
                .iter()
                .filter(|s| s.doc_id == doc.id)
                .cloned()
                .collect();
            let aligned = align_gold(doc, &spans, &self.schema).expect("synthetic gold aligns");
            out.extend(aligned.tags);
        }
        out
    }

    /// Serialize the corpus as standard JSONL records.
    pub fn corpus_jsonl(&self) -> String {
        corpus_to_jsonl(&self.corpus)
    }
}

/// Standard JSONL serialization of any corpus with its gold spans.
pub fn corpus_to_jsonl(corpus: &Corpus) -> String {
    let mut out = String::new();
    for doc in &corpus.documents {
        let spans: Vec<(usize, usize, usize)> = corpus
            .gold_spans
            .iter()
            .filter(|s| s.doc_id == doc.id)
            .map(|s| (s.char_start, s.char_end, s.class_label))
            .collect();
        let record = serde_json::json!({
            "id": doc.id,
            "text": doc.text,
            "spans": spans,
        });
        out.push_str(&record.to_string());
        out.push('\n');
    }
    out
}

fn random_word(rng: &mut ChaCha8Rng, len: usize) -> String {
    (0..len).map(|_| (b'a' + rng.random_range(0..26u8)) as char).collect()
}

/// Generate a corpus with known tags: a two-state (background/entity)
/// emission process extended to `k` classes, entity tokens drawn from the
/// entity lexicon, background tokens from the vocabulary. Deterministic in
/// `seed`.
pub fn generate_corpus(
    n_docs: usize,
    sentence_len_range: (usize, usize),
    entity_rate: f64,
    k: usize,
    seed: u64,
) -> SyntheticTask {
    assert!(n_docs > 0, "n_docs must be positive");
    assert!(k >= 2, "need at least 2 classes");
    assert!((0.0..1.0).contains(&entity_rate), "entity_rate must lie in [0, 1)");
    let (lo, hi) = sentence_len_range;
    assert!(lo > 0 && hi >= lo, "bad sentence length range");

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let class_names: Vec<String> =
        std::iter::once("O".to_string()).chain((1..k).map(|c| format!("E{c}"))).collect();
    let schema = TaskSchema::new(class_names, 0).expect("synthetic schema");

    // background vocabulary: random lowercase words (digit-free, so they
    // can never collide with class-marked entity words)
    let mut vocabulary: Vec<String> = Vec::new();
    while vocabulary.len() < 600 {
        let len = rng.random_range(4..9);
        let w = random_word(&mut rng, len);
        if !vocabulary.contains(&w) {
            vocabulary.push(w);
        }
    }

    // entity lexicon: 1-3 word surface forms per class
    let forms_per_class = 40usize;
    let mut entity_lexicon: Vec<EntityForm> = Vec::new();
    for class in 1..k {
        let words: Vec<String> = (0..60).map(|i| format!("e{class}t{i}")).collect();
        let mut seen = std::collections::BTreeSet::new();
        while seen.len() < forms_per_class {
            let len = rng.random_range(1..4usize);
            let form: Vec<String> =
                (0..len).map(|_| words.choose(&mut rng).unwrap().clone()).collect();
            let text = form.join(" ");
            if seen.insert(text.clone()) {
                entity_lexicon.push(EntityForm { text, class, out_of_dictionary: false });
            }
        }
    }
    // flag 20% of forms out-of-dictionary
    let n_ood = ((entity_lexicon.len() as f64) * 0.2).round() as usize;
    let mut order: Vec<usize> = (0..entity_lexicon.len()).collect();
    order.shuffle(&mut rng);
    for &i in order.iter().take(n_ood) {
        entity_lexicon[i].out_of_dictionary = true;
    }

    // per-slot entity start probability giving the requested token fraction
    let mean_len: f64 = entity_lexicon
        .iter()
        .map(|f| f.text.split(' ').count() as f64)
        .sum::<f64>()
        / entity_lexicon.len().max(1) as f64;
    let q = if entity_rate == 0.0 {
        0.0
    } else {
        entity_rate / (mean_len * (1.0 - entity_rate) + entity_rate)
    };

    let mut documents = Vec::with_capacity(n_docs);
    let mut gold_spans = Vec::new();
    for d in 0..n_docs {
        let id = format!("doc{d:05}");
        let mut text = String::new();
        let mut char_pos = 0usize;
        let n_sentences = rng.random_range(2..5usize);
        for s in 0..n_sentences {
            if s > 0 {
                text.push('\n');
                char_pos += 1;
            }
            let target = rng.random_range(lo..=hi);
            let mut emitted = 0usize;
            let mut first = true;
            while emitted < target {
                if !first {
                    text.push(' ');
                    char_pos += 1;
                }
                first = false;
                if !entity_lexicon.is_empty() && rng.random::<f64>() < q {
                    let form = entity_lexicon.choose(&mut rng).unwrap();
                    let start = char_pos;
                    text.push_str(&form.text);
                    char_pos += form.text.chars().count();
                    gold_spans.push(GoldSpan {
                        doc_id: id.clone(),
                        char_start: start,
                        char_end: char_pos,
                        class_label: form.class,
                    });
                    emitted += form.text.split(' ').count();
                } else {
                    let w = vocabulary.choose(&mut rng).unwrap();
                    text.push_str(w);
                    char_pos += w.chars().count();
                    emitted += 1;
                }
            }
        }
        documents.push(Document::new(id, text));
    }

    SyntheticTask {
        schema,
        corpus: Corpus { documents, gold_spans },
        vocabulary,
        entity_lexicon,
        seed,
    }
}

/// Simulate labeling sources over the task's gold tags. Each source is an
/// independent random stream; tokens are voted with probability
/// `coverage` and correct with probability `accuracy`.
pub fn simulate_sources(
    task: &SyntheticTask,
    specs: &[SourceSpec],
    seed: u64,
) -> Result<LabelMatrix> {
    assert!(!specs.is_empty(), "need at least one source spec");
    let gold = task.flat_gold_tags();
    let n = gold.len();
    let m = specs.len();
    let k = task.schema.k;
    let default = task.schema.default_class;
    let mut values = vec![ABSTAIN; n * m];

    for (j, spec) in specs.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(j as u64 + 1)));
        match spec.error_mode {
            ErrorMode::UniformFlip => {
                for (row, &g) in gold.iter().enumerate() {
                    if rng.random::<f64>() >= spec.coverage {
                        continue;
                    }
                    let vote = if rng.random::<f64>() < spec.accuracy {
                        g
                    } else {
                        let mut wrong = rng.random_range(0..k - 1);
                        if wrong >= g {
                            wrong += 1;
                        }
                        wrong
                    };
                    values[row * m + j] = vote as i8;
                }
            }
            ErrorMode::SpanTruncate => {
                let mut row = 0usize;
                while row < n {
                    if gold[row] == default {
                        if rng.random::<f64>() < spec.coverage {
                            let vote = if rng.random::<f64>() < spec.accuracy {
                                default
                            } else {
                                1 + rng.random_range(0..k - 1)
                            };
                            values[row * m + j] = vote as i8;
                        }
                        row += 1;
                        continue;
                    }
                    // an entity run: vote the whole span or truncate it
                    let class = gold[row];
                    let mut end = row;
                    while end < n && gold[end] == class {
                        end += 1;
                    }
                    if rng.random::<f64>() < spec.coverage {
                        let correct = rng.random::<f64>() < spec.accuracy;
                        let truncate_head = rng.random_bool(0.5);
                        for t in row..end {
                            let truncated = !correct
                                && ((truncate_head && t == row) || (!truncate_head && t == end - 1));
                            let vote = if truncated { default } else { class };
                            values[t * m + j] = vote as i8;
                        }
                    }
                    row = end;
                }
            }
        }
    }

    let rows: Vec<RowRef> = task
        .corpus
        .rows()
        .into_iter()
        .map(|(doc, sentence, token)| RowRef { doc, sentence, token })
        .collect();
    Ok(LabelMatrix {
        n,
        m,
        values,
        source_names: (0..m).map(|j| format!("sim{j:02}")).collect(),
        rows,
        doc_ids: task.corpus.documents.iter().map(|d| d.id.clone()).collect(),
    })
}

/// Quality profile for a simulated terminology.
#[derive(Debug, Clone, Copy)]
pub struct TerminologySpec {
    /// Fraction of the in-dictionary entity forms listed under their
    /// entity type.
    pub recall: f64,
    /// Fraction of the background vocabulary correctly listed under
    /// `TYPE_O` (the non-entity semantic type, mapped to the default
    /// class).
    pub background_recall: f64,
    /// Background words wrongly listed under an entity type (false
    /// positives).
    pub noise_terms: usize,
    /// Entity forms wrongly listed under `TYPE_O` (false negatives).
    pub miss_terms: usize,
}

/// Simulated terminologies over the task lexicon: each lists a sample of
/// in-dictionary entity forms under `TYPE_E<class>`, a sample of the
/// background vocabulary under `TYPE_O`, plus deliberate mistakes
/// (background words under entity types, entity forms under `TYPE_O`), so
/// coverage and precision vary across terminologies.
pub fn simulate_terminologies(
    task: &SyntheticTask,
    specs: &[TerminologySpec],
    seed: u64,
) -> Vec<Terminology> {
    simulate_terminologies_named(task, specs, seed, "lex")
}

/// Same as [`simulate_terminologies`] with a caller-chosen name prefix.
/// Each terminology samples independently, so noise words overlap across
/// terminologies only by chance.
pub fn simulate_terminologies_named(
    task: &SyntheticTask,
    specs: &[TerminologySpec],
    seed: u64,
    prefix: &str,
) -> Vec<Terminology> {
    let in_dict = task.in_dictionary_forms();
    let mut out = Vec::with_capacity(specs.len());
    for (i, spec) in specs.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64 + 1));
        // word -> semantic type, so errors overwrite rather than mix
        let mut listing: std::collections::BTreeMap<String, String> = std::collections::BTreeMap::new();

        let mut form_order: Vec<usize> = (0..in_dict.len()).collect();
        form_order.shuffle(&mut rng);
        let n_correct = ((in_dict.len() as f64) * spec.recall).round() as usize;
        for (rank, &f) in form_order.iter().enumerate() {
            let form = in_dict[f];
            if rank < n_correct {
                listing.insert(form.text.clone(), format!("TYPE_E{}", form.class));
            } else if rank < n_correct + spec.miss_terms {
                listing.insert(form.text.clone(), "TYPE_O".to_string());
            }
        }

        // background words: first a correct `TYPE_O` sample, then noise
        // wrongly listed under an entity type
        let mut word_order: Vec<usize> = (0..task.vocabulary.len()).collect();
        word_order.shuffle(&mut rng);
        let n_background = ((task.vocabulary.len() as f64) * spec.background_recall).round() as usize;
        for (rank, &w) in word_order.iter().enumerate() {
            let word = &task.vocabulary[w];
            if rank < n_background {
                listing.insert(word.clone(), "TYPE_O".to_string());
            } else if rank < n_background + spec.noise_terms {
                let class = 1 + rng.random_range(0..task.schema.k - 1);
                listing.insert(word.clone(), format!("TYPE_E{class}"));
            }
        }

        let mut t = Terminology::new(format!("{prefix}{i:02}"));
        for (word, sty) in listing {
            t.insert(&word, &sty);
        }
        if t.is_empty()
            && let Some(form) = in_dict.first()
        {
            t.insert(&form.text, &format!("TYPE_E{}", form.class));
        }
        out.push(t);
    }
    out
}

/// Synset TSV pairing in-dictionary forms of the same class.
pub fn simulate_synsets_tsv(task: &SyntheticTask) -> String {
    let mut out = String::new();
    let mut idx = 0usize;
    for class in 1..task.schema.k {
        let in_dict = task.in_dictionary_forms();
        let forms: Vec<&&EntityForm> = in_dict.iter().filter(|f| f.class == class).collect();
        for pair in forms.chunks(2) {
            if pair.len() == 2 {
                out.push_str(&format!("S{idx:03}\t{}\n", pair[0].text));
                out.push_str(&format!("S{idx:03}\t{}\n", pair[1].text));
                idx += 1;
            }
        }
    }
    out
}

/// `term \t semantic_type` serialization of a terminology.
pub fn terminology_tsv(t: &Terminology) -> String {
    let mut out = String::new();
    for (term, types) in &t.entries {
        for sty in types {
            out.push_str(&format!("{term}\t{sty}\n"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_seed_deterministic() {
        let a = generate_corpus(10, (8, 14), 0.25, 2, 42);
        let b = generate_corpus(10, (8, 14), 0.25, 2, 42);
        assert_eq!(a.corpus, b.corpus);
        assert_eq!(a.entity_lexicon, b.entity_lexicon);
        let c = generate_corpus(10, (8, 14), 0.25, 2, 43);
        assert_ne!(a.corpus, c.corpus);
    }

    #[test]
    fn zero_entity_rate_gives_all_default_tags() {
        let task = generate_corpus(5, (5, 10), 0.0, 2, 1);
        assert!(task.corpus.gold_spans.is_empty());
        assert!(task.flat_gold_tags().iter().all(|&t| t == 0));
    }

    #[test]
    fn entity_token_fraction_tracks_rate() {
        let task = generate_corpus(100, (20, 30), 0.2, 2, 7);
        let tags = task.flat_gold_tags();
        let frac = tags.iter().filter(|&&t| t != 0).count() as f64 / tags.len() as f64;
        assert!((frac - 0.2).abs() < 0.03, "fraction {frac}");
    }

    #[test]
    fn about_a_fifth_of_forms_are_out_of_dictionary() {
        let task = generate_corpus(2, (5, 6), 0.2, 3, 3);
        let n = task.entity_lexicon.len();
        let ood = task.out_of_dictionary_forms().len();
        assert_eq!(ood, ((n as f64) * 0.2).round() as usize);
    }

    #[test]
    fn perfect_source_copies_gold() {
        let task = generate_corpus(20, (10, 15), 0.3, 2, 11);
        let m = simulate_sources(&task, &[SourceSpec::flip(1.0, 1.0)], 5).unwrap();
        let gold = task.flat_gold_tags();
        for (row, &g) in gold.iter().enumerate() {
            assert_eq!(m.get(row, 0), g as i8);
        }
    }

    #[test]
    fn empirical_accuracy_converges_to_spec() {
        let task = generate_corpus(150, (25, 35), 0.3, 2, 13);
        let spec = SourceSpec::flip(0.7, 0.8);
        let m = simulate_sources(&task, &[spec], 17).unwrap();
        let gold = task.flat_gold_tags();
        let mut voted = 0usize;
        let mut agree = 0usize;
        for (row, &g) in gold.iter().enumerate() {
            let v = m.get(row, 0);
            if v != ABSTAIN {
                voted += 1;
                agree += usize::from(v as usize == g);
            }
        }
        let p = agree as f64 / voted as f64;
        let tol = 1.96 * (0.7f64 * 0.3 / voted as f64).sqrt();
        assert!((p - 0.7).abs() < tol, "accuracy {p}, tolerance {tol}, n {voted}");
        let cov = voted as f64 / gold.len() as f64;
        let cov_tol = 1.96 * (0.8f64 * 0.2 / gold.len() as f64).sqrt();
        assert!((cov - 0.8).abs() < cov_tol, "coverage {cov}");
    }

    #[test]
    fn pairwise_moment_matches_analytic_identity() {
        // for accuracies (0.9, 0.8): O_12 = (2*0.9-1)(2*0.8-1) = 0.48
        let task = generate_corpus(500, (25, 35), 0.4, 2, 19);
        let specs = [SourceSpec::flip(0.9, 1.0), SourceSpec::flip(0.8, 1.0)];
        let m = simulate_sources(&task, &specs, 23).unwrap();
        let (moments, counts) = crate::labelmodel::pairwise_moments(&m, 1);
        assert!(counts[0][1] > 40_000);
        assert!((moments[0][1] - 0.48).abs() < 0.02, "O_12 {}", moments[0][1]);
    }

    #[test]
    fn source_errors_are_independent() {
        let task = generate_corpus(300, (25, 35), 0.3, 2, 29);
        let specs = [SourceSpec::flip(0.7, 1.0), SourceSpec::flip(0.7, 1.0)];
        let m = simulate_sources(&task, &specs, 31).unwrap();
        let gold = task.flat_gold_tags();
        let errs: Vec<Vec<f64>> = (0..2)
            .map(|j| {
                gold.iter()
                    .enumerate()
                    .map(|(row, &g)| f64::from(m.get(row, j) as usize != g))
                    .collect()
            })
            .collect();
        let n = gold.len() as f64;
        let mean: Vec<f64> = errs.iter().map(|e| e.iter().sum::<f64>() / n).collect();
        let mut cov = 0.0;
        let mut var = [0.0, 0.0];
        for (a, b) in errs[0].iter().zip(&errs[1]) {
            cov += (a - mean[0]) * (b - mean[1]);
            var[0] += (a - mean[0]).powi(2);
            var[1] += (b - mean[1]).powi(2);
        }
        let corr = cov / (var[0].sqrt() * var[1].sqrt());
        let se = 1.0 / n.sqrt();
        assert!(corr.abs() < 3.0 * se, "correlation {corr}, 3se {}", 3.0 * se);
    }

    #[test]
    fn span_truncate_clips_one_boundary_token() {
        let task = generate_corpus(100, (15, 25), 0.3, 2, 37);
        let spec = SourceSpec { accuracy: 0.0, coverage: 1.0, error_mode: ErrorMode::SpanTruncate };
        let m = simulate_sources(&task, &[spec], 41).unwrap();
        let gold = task.flat_gold_tags();
        // walk entity runs: with accuracy 0 every covered span must have
        // exactly one boundary token voted default, rest voted the class
        let mut row = 0usize;
        while row < gold.len() {
            if gold[row] == 0 {
                row += 1;
                continue;
            }
            let mut end = row;
            while end < gold.len() && gold[end] == gold[row] {
                end += 1;
            }
            let votes: Vec<i8> = (row..end).map(|r| m.get(r, 0)).collect();
            let defaults = votes.iter().filter(|&&v| v == 0).count();
            assert_eq!(defaults, 1, "span votes {votes:?}");
            assert!(votes[0] == 0 || votes[votes.len() - 1] == 0);
            row = end;
        }
    }

    #[test]
    fn corpus_jsonl_round_trips_through_ingestion() {
        let task = generate_corpus(8, (8, 14), 0.25, 2, 43);
        let jsonl = task.corpus_jsonl();
        let back =
            crate::corpus::ingest_corpus_str(&jsonl, &task.schema, std::path::Path::new("mem"))
                .unwrap();
        assert_eq!(back.documents.len(), task.corpus.documents.len());
        assert_eq!(back.gold_spans.len(), task.corpus.gold_spans.len());
        for (a, b) in back.documents.iter().zip(&task.corpus.documents) {
            assert_eq!(a.sentences, b.sentences);
        }
    }
}
