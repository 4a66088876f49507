//! Bundled synthetic task presets: corpus splits, simulated terminologies,
//! synsets, labeling-function bundles, and ready-to-run pipeline configs
//! (including the four additive supervision tiers).

use std::fs;
use std::path::Path;

use serde_json::json;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::synthetic::{
    SyntheticTask, TerminologySpec, corpus_to_jsonl, generate_corpus, simulate_synsets_tsv,
    simulate_terminologies_named, terminology_tsv,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Six terminologies of mixed quality, four tier configs, end model on.
    Default,
    /// Ten terminologies for partition sweeps, end model off.
    Sweep,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Preset> {
        match s {
            "default" => Ok(Preset::Default),
            "sweep" => Ok(Preset::Sweep),
            other => Err(Error::config(format!("unknown preset `{other}` (want default|sweep)"))),
        }
    }
}

/// Split a synthetic task's documents into train/validation/test corpora
/// (shared lexicon and vocabulary).
pub fn split_corpus(task: &SyntheticTask, n_train: usize, n_val: usize) -> (Corpus, Corpus, Corpus) {
    let take = |range: std::ops::Range<usize>| -> Corpus {
        let documents: Vec<_> = task.corpus.documents[range].to_vec();
        let ids: std::collections::BTreeSet<&str> =
            documents.iter().map(|d| d.id.as_str()).collect();
        let gold_spans = task
            .corpus
            .gold_spans
            .iter()
            .filter(|s| ids.contains(s.doc_id.as_str()))
            .cloned()
            .collect();
        Corpus { documents, gold_spans }
    };
    let n = task.corpus.documents.len();
    (take(0..n_train), take(n_train..n_train + n_val), take(n_train + n_val..n))
}

fn write(dir: &Path, name: &str, data: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, data).map_err(|e| Error::io(&path, e))
}

fn guideline_entries(task: &SyntheticTask) -> Vec<serde_json::Value> {
    let positive: Vec<String> = task
        .in_dictionary_forms()
        .iter()
        .take(6)
        .map(|f| f.text.clone())
        .collect();
    // explicit negative examples: a third of the background vocabulary,
    // the way annotation guidelines enumerate known non-entities
    let negative: Vec<String> = task
        .vocabulary
        .iter()
        .step_by(3)
        .take(200)
        .cloned()
        .collect();
    vec![
        json!({
            "kind": "guideline_dict", "name": "LF_guide_pos",
            "positive": positive, "negative": negative, "positive_class": "E1",
            "stopwords": false, "punct_numbers": false
        }),
        json!({
            "kind": "guideline_dict", "name": "LF_guide_stop",
            "positive": [], "negative": [], "positive_class": "E1",
            "stopwords": true, "punct_numbers": false
        }),
        json!({
            "kind": "guideline_dict", "name": "LF_guide_sym",
            "positive": [], "negative": [], "positive_class": "E1",
            "stopwords": false, "punct_numbers": true
        }),
    ]
}

/// Generate a complete synthetic task directory. Deterministic in `seed`.
/// Returns the relative names of the written config files.
pub fn generate_preset(dir: &Path, preset: Preset, seed: u64) -> Result<Vec<String>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    match preset {
        Preset::Default => generate_default(dir, seed),
        Preset::Sweep => generate_sweep(dir, seed),
    }
}

fn base_config(terminologies: &[(String, String)], seeds: &[u64]) -> serde_json::Value {
    json!({
        "schema": {"class_names": ["O", "E1"], "default_class": 0},
        "corpora": {"train": "train.jsonl", "validation": "validation.jsonl", "test": "test.jsonl"},
        "terminologies": terminologies.iter().map(|(name, path)| json!({"name": name, "path": path})).collect::<Vec<_>>(),
        "class_map": "class_map.json",
        "synsets": "synsets.tsv",
        "ontology_lfs": {"semantic_type": true, "slot_patterns": true, "synset": "any_pair"},
        "lf_bundle": "lfs.guidelines.json",
        "partition_s": 3,
        "eval_mode": "exact_span",
        "label_model": {"learning_rate": 0.01, "epochs": 200, "l2": 0.0001, "accuracy_prior": 0.7, "seed": 0},
        "end_model": {"enabled": true, "learning_rate": 0.5, "epochs": 5, "l2": 0.0, "seed": 0, "dim_bits": 18, "batch_size": 32},
        "seeds": seeds,
    })
}

fn generate_default(dir: &Path, seed: u64) -> Result<Vec<String>> {
    let task = generate_corpus(420, (8, 16), 0.3, 2, seed);
    let (train, validation, test) = split_corpus(&task, 240, 90);
    write(dir, "train.jsonl", &corpus_to_jsonl(&train))?;
    write(dir, "validation.jsonl", &corpus_to_jsonl(&validation))?;
    write(dir, "test.jsonl", &corpus_to_jsonl(&test))?;

    let specs = [
        TerminologySpec { recall: 0.95, background_recall: 0.9, noise_terms: 3, miss_terms: 1 },
        TerminologySpec { recall: 0.9, background_recall: 0.85, noise_terms: 6, miss_terms: 2 },
        TerminologySpec { recall: 0.6, background_recall: 0.55, noise_terms: 60, miss_terms: 8 },
        TerminologySpec { recall: 0.55, background_recall: 0.5, noise_terms: 80, miss_terms: 10 },
        TerminologySpec { recall: 0.5, background_recall: 0.45, noise_terms: 100, miss_terms: 12 },
        TerminologySpec { recall: 0.45, background_recall: 0.45, noise_terms: 110, miss_terms: 12 },
    ];
    let terms = simulate_terminologies_named(&task, &specs, seed.wrapping_add(100), "lex");
    let mut term_refs: Vec<(String, String)> = Vec::new();
    for t in &terms {
        let file = format!("{}.tsv", t.name);
        write(dir, &file, &terminology_tsv(t))?;
        term_refs.push((t.name.clone(), file));
    }
    // a ChEBI-like "other" source: high coverage, low precision
    let other_spec =
        [TerminologySpec { recall: 0.95, background_recall: 0.2, noise_terms: 90, miss_terms: 0 }];
    let other = simulate_terminologies_named(&task, &other_spec, seed.wrapping_add(200), "other");
    write(dir, "other00.tsv", &terminology_tsv(&other[0]))?;

    write(dir, "synsets.tsv", &simulate_synsets_tsv(&task))?;
    write(
        dir,
        "class_map.json",
        &serde_json::to_string_pretty(&json!({"TYPE_E1": "E1", "TYPE_O": "O"})).unwrap(),
    )?;

    let guide = guideline_entries(&task);
    write(
        dir,
        "lfs.guidelines.json",
        &serde_json::to_string_pretty(&json!({"labeling_functions": guide})).unwrap(),
    )?;
    let mut rules = guide.clone();
    rules.push(json!({
        "kind": "pattern", "name": "LF_rgx_entity",
        "patterns": [r"\be1t[0-9]+\b"], "label": "E1"
    }));
    write(
        dir,
        "lfs.rules.json",
        &serde_json::to_string_pretty(&json!({"labeling_functions": rules})).unwrap(),
    )?;

    let seeds = [0u64, 1];
    let mut files = Vec::new();
    // tier 1: guideline dictionaries only
    let mut tier1 = base_config(&[], &seeds);
    tier1["ontology_lfs"] = json!({"semantic_type": false, "slot_patterns": false, "synset": "off"});
    // tier 2: + coverage-partitioned terminologies and synsets
    let tier2 = base_config(&term_refs, &seeds);
    // tier 3: + the noisy extra source
    let mut tier3 = base_config(&term_refs, &seeds);
    tier3["other_terminologies"] = json!([{"name": "other00", "path": "other00.tsv"}]);
    // tier 4: + task-specific pattern rules
    let mut tier4 = tier3.clone();
    tier4["lf_bundle"] = json!("lfs.rules.json");

    for (name, value) in [
        ("config.json", &tier2),
        ("config.tier1.json", &tier1),
        ("config.tier2.json", &tier2),
        ("config.tier3.json", &tier3),
        ("config.tier4.json", &tier4),
    ] {
        write(dir, name, &serde_json::to_string_pretty(value).unwrap())?;
        files.push(name.to_string());
    }
    Ok(files)
}

fn generate_sweep(dir: &Path, seed: u64) -> Result<Vec<String>> {
    let task = generate_corpus(400, (8, 16), 0.3, 2, seed);
    let (train, validation, test) = split_corpus(&task, 210, 150);
    write(dir, "train.jsonl", &corpus_to_jsonl(&train))?;
    write(dir, "validation.jsonl", &corpus_to_jsonl(&validation))?;
    write(dir, "test.jsonl", &corpus_to_jsonl(&test))?;

    let specs: Vec<TerminologySpec> = vec![
        TerminologySpec { recall: 0.98, background_recall: 0.9, noise_terms: 3, miss_terms: 1 },
        TerminologySpec { recall: 0.96, background_recall: 0.85, noise_terms: 5, miss_terms: 1 },
        TerminologySpec { recall: 0.5, background_recall: 0.45, noise_terms: 140, miss_terms: 14 },
        TerminologySpec { recall: 0.5, background_recall: 0.4, noise_terms: 150, miss_terms: 14 },
        TerminologySpec { recall: 0.45, background_recall: 0.4, noise_terms: 160, miss_terms: 16 },
        TerminologySpec { recall: 0.45, background_recall: 0.4, noise_terms: 165, miss_terms: 16 },
        TerminologySpec { recall: 0.4, background_recall: 0.35, noise_terms: 170, miss_terms: 18 },
        TerminologySpec { recall: 0.4, background_recall: 0.35, noise_terms: 175, miss_terms: 18 },
        TerminologySpec { recall: 0.35, background_recall: 0.3, noise_terms: 180, miss_terms: 20 },
        TerminologySpec { recall: 0.35, background_recall: 0.3, noise_terms: 185, miss_terms: 20 },
    ];
    let terms = simulate_terminologies_named(&task, &specs, seed.wrapping_add(100), "lex");
    let mut term_refs: Vec<(String, String)> = Vec::new();
    for t in &terms {
        let file = format!("{}.tsv", t.name);
        write(dir, &file, &terminology_tsv(t))?;
        term_refs.push((t.name.clone(), file));
    }
    write(dir, "synsets.tsv", &simulate_synsets_tsv(&task))?;
    write(
        dir,
        "class_map.json",
        &serde_json::to_string_pretty(&json!({"TYPE_E1": "E1", "TYPE_O": "O"})).unwrap(),
    )?;
    write(
        dir,
        "lfs.guidelines.json",
        &serde_json::to_string_pretty(&json!({"labeling_functions": guideline_entries(&task)})).unwrap(),
    )?;

    let mut cfg = base_config(&term_refs, &[0]);
    cfg["end_model"] = json!({"enabled": false});
    write(dir, "config.json", &serde_json::to_string_pretty(&cfg).unwrap())?;
    Ok(vec!["config.json".to_string()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::PipelineConfig;

    #[test]
    fn default_preset_is_loadable_and_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        generate_preset(&a, Preset::Default, 7).unwrap();
        generate_preset(&b, Preset::Default, 7).unwrap();
        for name in ["train.jsonl", "lex00.tsv", "config.json", "lfs.rules.json", "synsets.tsv"] {
            let x = std::fs::read(a.join(name)).unwrap();
            let y = std::fs::read(b.join(name)).unwrap();
            assert_eq!(x, y, "{name} differs between identical seeds");
        }
        for cfg_name in ["config.json", "config.tier1.json", "config.tier4.json"] {
            let cfg = PipelineConfig::load(a.join(cfg_name)).unwrap();
            assert_eq!(cfg.schema().unwrap().k, 2);
        }
    }

    #[test]
    fn sweep_preset_has_ten_terminologies() {
        let dir = tempfile::tempdir().unwrap();
        generate_preset(dir.path(), Preset::Sweep, 3).unwrap();
        let cfg = PipelineConfig::load(dir.path().join("config.json")).unwrap();
        assert_eq!(cfg.terminologies.len(), 10);
        assert!(!cfg.end_model.enabled);
    }

    #[test]
    fn missing_referenced_path_fails_at_load_time() {
        let dir = tempfile::tempdir().unwrap();
        generate_preset(dir.path(), Preset::Sweep, 3).unwrap();
        std::fs::remove_file(dir.path().join("lex04.tsv")).unwrap();
        let err = PipelineConfig::load(dir.path().join("config.json")).unwrap_err();
        assert!(err.to_string().contains("lex04.tsv"), "{err}");
    }
}
