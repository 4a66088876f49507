//! Pipeline driver: configuration loading, stage orchestration
//! (ingest -> label -> fit -> predict -> train -> eval), partition sweeps,
//! corpus search, and the run-directory manifest.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use regex::RegexBuilder;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{ABSTAIN, Corpus, TaskSchema, align_gold, ingest_corpus, split_tags_by_sentence};
use crate::endmodel::{EndModelConfig, ExportMode, LinearTokenModel, export_dataset, predict_tags, train_noise_aware};
use crate::error::{Error, Result};
use crate::labelers::{CueRule, DatetimeRule, Direction, LabelMatrix, LabelingFunction, SynsetMode, build_label_matrix};
use crate::labelmodel::{LabelModelConfig, LabelModelParams, ProbabilisticDataset, fit_label_model, lm_hard_labels, majority_vote, predict_proba};
use crate::metrics::{EvalMode, EvalReport, span_prf, spans_of_sequences, summarize};
use crate::ontology::{ClassMap, SynsetIndex, Terminology, build_synsets, build_term_class_map, default_stopwords, load_terminology, preprocess_terms, rank_and_partition};

pub const TOOL_VERSION: &str = concat!("ontolabel ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Ontology,
    Label,
    Fit,
    Predict,
    Train,
    Eval,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Ingest => "ingest",
            Stage::Ontology => "ontology",
            Stage::Label => "label",
            Stage::Fit => "fit",
            Stage::Predict => "predict",
            Stage::Train => "train",
            Stage::Eval => "eval",
            Stage::Report => "report",
        };
        f.write_str(name)
    }
}

/// An error attributed to the pipeline stage that raised it.
#[derive(Debug)]
pub struct StageError {
    pub stage: Stage,
    pub source: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage `{}`: {}", self.stage, self.source)
    }
}

impl std::error::Error for StageError {}

trait AtStage<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError> {
        self.map_err(|source| StageError { stage, source })
    }
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemaConfig {
    pub class_names: Vec<String>,
    #[serde(default)]
    pub default_class: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorporaConfig {
    pub train: String,
    pub validation: String,
    pub test: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TerminologyRef {
    pub name: String,
    pub path: String,
}

fn default_true() -> bool {
    true
}

fn default_synset_mode() -> String {
    "any_pair".to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OntologyLfConfig {
    #[serde(default = "default_true")]
    pub semantic_type: bool,
    #[serde(default = "default_true")]
    pub slot_patterns: bool,
    /// `off`, `any_pair`, or `schwartz_hearst`.
    #[serde(default = "default_synset_mode")]
    pub synset: String,
}

impl Default for OntologyLfConfig {
    fn default() -> Self {
        OntologyLfConfig {
            semantic_type: true,
            slot_patterns: true,
            synset: default_synset_mode(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EndModelSection {
    #[serde(default = "default_true")]
    pub enabled: bool,
    #[serde(flatten)]
    pub config: EndModelConfig,
}

impl Default for EndModelSection {
    fn default() -> Self {
        EndModelSection { enabled: true, config: EndModelConfig::default() }
    }
}

fn default_partition_s() -> usize {
    1
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_eval_mode() -> EvalMode {
    EvalMode::ExactSpan
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub schema: SchemaConfig,
    pub corpora: CorporaConfig,
    #[serde(default)]
    pub terminologies: Vec<TerminologyRef>,
    /// Extra sources outside the coverage partition; each becomes a single
    /// labeling function.
    #[serde(default)]
    pub other_terminologies: Vec<TerminologyRef>,
    #[serde(default)]
    pub synsets: Option<String>,
    #[serde(default)]
    pub class_map: Option<String>,
    #[serde(default)]
    pub ontology_lfs: OntologyLfConfig,
    #[serde(default)]
    pub lf_bundle: Option<String>,
    #[serde(default = "default_partition_s")]
    pub partition_s: usize,
    #[serde(default = "default_eval_mode")]
    pub eval_mode: EvalMode,
    #[serde(default)]
    pub label_model: LabelModelConfig,
    #[serde(default)]
    pub end_model: EndModelSection,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<PipelineConfig> {
        let path = path.as_ref();
        let data = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: PipelineConfig = serde_json::from_str(&data)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve(&self, rel: &str) -> PathBuf {
        let p = Path::new(rel);
        if p.is_absolute() { p.to_path_buf() } else { self.base_dir.join(p) }
    }

    pub fn schema(&self) -> Result<TaskSchema> {
        TaskSchema::new(self.schema.class_names.clone(), self.schema.default_class)
    }

    fn validate(&self) -> Result<()> {
        self.schema()?;
        if self.partition_s == 0 {
            return Err(Error::config("partition_s must be >= 1"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("at least one seed is required"));
        }
        let mut referenced: Vec<(&str, String)> = vec![
            ("train corpus", self.corpora.train.clone()),
            ("validation corpus", self.corpora.validation.clone()),
            ("test corpus", self.corpora.test.clone()),
        ];
        for t in self.terminologies.iter().chain(&self.other_terminologies) {
            referenced.push(("terminology", t.path.clone()));
        }
        if let Some(s) = &self.synsets {
            referenced.push(("synsets", s.clone()));
        }
        if let Some(s) = &self.class_map {
            referenced.push(("class map", s.clone()));
        }
        if let Some(s) = &self.lf_bundle {
            referenced.push(("lf bundle", s.clone()));
        }
        for (what, rel) in referenced {
            let p = self.resolve(&rel);
            if !p.exists() {
                return Err(Error::config(format!("{what} path does not exist: {}", p.display())));
            }
        }
        match self.ontology_lfs.synset.as_str() {
            "off" | "any_pair" | "schwartz_hearst" => {}
            other => {
                return Err(Error::config(format!(
                    "ontology_lfs.synset must be off/any_pair/schwartz_hearst, got `{other}`"
                )));
            }
        }
        self.label_model.validate()?;
        if self.end_model.enabled {
            self.end_model.config.validate()?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Labeling-function bundle
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum BundleEntry {
    GuidelineDict {
        name: String,
        #[serde(default)]
        positive: Vec<String>,
        #[serde(default)]
        negative: Vec<String>,
        positive_class: String,
        #[serde(default = "default_true")]
        stopwords: bool,
        #[serde(default = "default_true")]
        punct_numbers: bool,
    },
    Pattern {
        name: String,
        patterns: Vec<String>,
        label: String,
    },
    CueWindow {
        name: String,
        patterns: Vec<String>,
        direction: Direction,
        #[serde(default = "default_cue_window")]
        window: usize,
        label: String,
        #[serde(default)]
        terminators: Vec<String>,
    },
    NearestDatetime {
        name: String,
        #[serde(default)]
        timex_patterns: Option<Vec<String>>,
        #[serde(default)]
        past_headers: Option<Vec<String>>,
        before: String,
        overlap: String,
        after: String,
    },
}

fn default_cue_window() -> usize {
    6
}

#[derive(Debug, Deserialize)]
struct Bundle {
    labeling_functions: Vec<BundleEntry>,
}

fn class_index(schema: &TaskSchema, name: &str) -> Result<usize> {
    schema
        .class_index(name)
        .ok_or_else(|| Error::config(format!("unknown class `{name}` in labeling-function bundle")))
}

/// Parse a labeling-function bundle file against the task schema.
pub fn load_lf_bundle(path: &Path, schema: &TaskSchema) -> Result<Vec<LabelingFunction>> {
    let data = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bundle: Bundle = serde_json::from_str(&data)
        .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
    let stop = default_stopwords();
    let mut out = Vec::new();
    for entry in bundle.labeling_functions {
        match entry {
            BundleEntry::GuidelineDict {
                name,
                positive,
                negative,
                positive_class,
                stopwords,
                punct_numbers,
            } => {
                let class = class_index(schema, &positive_class)?;
                out.push(LabelingFunction::guideline_with_flags(
                    name,
                    &positive,
                    &negative,
                    class,
                    stop.clone(),
                    stopwords,
                    punct_numbers,
                ));
            }
            BundleEntry::Pattern { name, patterns, label } => {
                let class = class_index(schema, &label)?;
                out.push(LabelingFunction::pattern(name, &patterns, class)?);
            }
            BundleEntry::CueWindow { name, patterns, direction, window, label, terminators } => {
                let class = class_index(schema, &label)?;
                let rule = CueRule::new(&patterns, direction, window, class, &terminators)?;
                out.push(LabelingFunction::cue_window(name, rule));
            }
            BundleEntry::NearestDatetime { name, timex_patterns, past_headers, before, overlap, after } => {
                let rule = DatetimeRule::new(
                    &timex_patterns.unwrap_or_else(crate::labelers::cues::default_timex_patterns),
                    &past_headers.unwrap_or_else(crate::labelers::cues::default_past_header_patterns),
                    class_index(schema, &before)?,
                    class_index(schema, &overlap)?,
                    class_index(schema, &after)?,
                )?;
                out.push(LabelingFunction::nearest_datetime(name, rule));
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Task loading and LF instantiation
// ---------------------------------------------------------------------------

pub struct LoadedTask {
    pub schema: TaskSchema,
    pub train: Corpus,
    pub validation: Corpus,
    pub test: Corpus,
    /// Preprocessed, partitionable terminologies.
    pub terminologies: Vec<Terminology>,
    /// Preprocessed extra sources, one labeling function each.
    pub other_terminologies: Vec<Terminology>,
    pub class_map: Option<ClassMap>,
    pub synsets: Option<SynsetIndex>,
    pub bundle: Vec<LabelingFunction>,
}

pub fn load_task(cfg: &PipelineConfig) -> Result<LoadedTask> {
    let schema = cfg.schema()?;
    let train = ingest_corpus(cfg.resolve(&cfg.corpora.train), &schema)?;
    let validation = ingest_corpus(cfg.resolve(&cfg.corpora.validation), &schema)?;
    let test = ingest_corpus(cfg.resolve(&cfg.corpora.test), &schema)?;

    let stop = default_stopwords();
    let load_all = |refs: &[TerminologyRef]| -> Result<Vec<Terminology>> {
        refs.iter()
            .map(|r| Ok(preprocess_terms(&load_terminology(cfg.resolve(&r.path), &r.name)?, &stop)))
            .collect()
    };
    let terminologies = load_all(&cfg.terminologies)?;
    let other_terminologies = load_all(&cfg.other_terminologies)?;

    let class_map = match &cfg.class_map {
        Some(rel) => Some(ClassMap::from_json_file(cfg.resolve(rel), &schema)?),
        None => None,
    };
    let synsets = match &cfg.synsets {
        Some(rel) => Some(build_synsets(cfg.resolve(rel))?),
        None => None,
    };
    let bundle = match &cfg.lf_bundle {
        Some(rel) => load_lf_bundle(&cfg.resolve(rel), &schema)?,
        None => Vec::new(),
    };
    Ok(LoadedTask {
        schema,
        train,
        validation,
        test,
        terminologies,
        other_terminologies,
        class_map,
        synsets,
        bundle,
    })
}

/// Instantiate the full labeling-function set for a partition size `s`:
/// top-`s` terminologies as individual semantic-type functions, the
/// merged tail as one more, each extra terminology as one, the pooled
/// synset function, then the bundle.
pub fn build_labeling_functions(task: &LoadedTask, cfg: &PipelineConfig, s: usize) -> Result<Vec<LabelingFunction>> {
    let mut lfs = Vec::new();
    let slot = cfg.ontology_lfs.slot_patterns;
    if cfg.ontology_lfs.semantic_type && !task.terminologies.is_empty() {
        let cm = task
            .class_map
            .as_ref()
            .ok_or_else(|| Error::config("semantic-type labeling functions require a class_map"))?;
        let plan = rank_and_partition(&task.terminologies, &task.train, s)?;
        for t in &plan.head {
            let tcm = build_term_class_map(std::slice::from_ref(t), cm, &task.schema)?;
            lfs.push(LabelingFunction::semantic_type(format!("LF_st_{}", t.name), tcm, slot));
        }
        if let Some(tail) = &plan.tail_merged {
            let tcm = build_term_class_map(std::slice::from_ref(tail), cm, &task.schema)?;
            lfs.push(LabelingFunction::semantic_type("LF_st_tail_merged", tcm, slot));
        }
    }
    if let Some(cm) = &task.class_map {
        for t in &task.other_terminologies {
            let tcm = build_term_class_map(std::slice::from_ref(t), cm, &task.schema)?;
            lfs.push(LabelingFunction::semantic_type(format!("LF_other_{}", t.name), tcm, slot));
        }
    }
    if cfg.ontology_lfs.synset != "off"
        && let (Some(index), Some(cm)) = (&task.synsets, &task.class_map)
    {
        let mode = if cfg.ontology_lfs.synset == "schwartz_hearst" {
            SynsetMode::SchwartzHearst
        } else {
            SynsetMode::AnyPair
        };
        let all: Vec<Terminology> = task
            .terminologies
            .iter()
            .chain(&task.other_terminologies)
            .cloned()
            .collect();
        if !all.is_empty() {
            let tcm = build_term_class_map(&all, cm, &task.schema)?;
            lfs.push(LabelingFunction::synset("LF_synsets", index.clone(), tcm, mode));
        }
    }
    lfs.extend(task.bundle.iter().cloned());
    if lfs.is_empty() {
        return Err(Error::config("configuration produces no labeling functions"));
    }
    Ok(lfs)
}

// ---------------------------------------------------------------------------
// Evaluation helpers
// ---------------------------------------------------------------------------

/// Gold tags per sentence across the corpus, in global sentence order.
pub fn gold_sequences(corpus: &Corpus, schema: &TaskSchema) -> Result<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    for doc in &corpus.documents {
        let spans: Vec<_> = corpus.gold_spans.iter().filter(|s| s.doc_id == doc.id).cloned().collect();
        let aligned = align_gold(doc, &spans, schema)?;
        out.extend(split_tags_by_sentence(doc, &aligned.tags));
    }
    Ok(out)
}

/// Flat per-token labels split into per-sentence sequences.
pub fn label_sequences(corpus: &Corpus, labels: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut flat = 0usize;
    for doc in &corpus.documents {
        for sent in &doc.sentences {
            let n = sent.tokens.len();
            out.push(labels[flat..flat + n].to_vec());
            flat += n;
        }
    }
    out
}

pub fn evaluate_labels(
    labels: &[usize],
    corpus: &Corpus,
    schema: &TaskSchema,
    mode: EvalMode,
) -> Result<EvalReport> {
    let pred = spans_of_sequences(&label_sequences(corpus, labels), schema);
    let gold = spans_of_sequences(&gold_sequences(corpus, schema)?, schema);
    Ok(span_prf(&pred, &gold, mode))
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

fn write_file(path: &Path, data: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, data).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Serialize)]
struct SplitStats {
    documents: usize,
    sentences: usize,
    tokens: usize,
    gold_spans: usize,
}

fn split_stats(corpus: &Corpus) -> SplitStats {
    SplitStats {
        documents: corpus.documents.len(),
        sentences: corpus.documents.iter().map(|d| d.sentences.len()).sum(),
        tokens: corpus.num_tokens(),
        gold_spans: corpus.gold_spans.len(),
    }
}

pub fn stage_ingest(task: &LoadedTask, out: &Path) -> Result<()> {
    let stats: BTreeMap<&str, SplitStats> = [
        ("train", split_stats(&task.train)),
        ("validation", split_stats(&task.validation)),
        ("test", split_stats(&task.test)),
    ]
    .into_iter()
    .collect();
    write_file(
        &out.join("corpus.stats.json"),
        &serde_json::to_string_pretty(&stats).expect("stats serialize"),
    )
}

pub fn stage_label(task: &LoadedTask, cfg: &PipelineConfig, out: &Path) -> Result<Vec<String>> {
    let lfs = build_labeling_functions(task, cfg, cfg.partition_s)?;
    let mut warnings = Vec::new();
    for (split, corpus) in [("train", &task.train), ("validation", &task.validation), ("test", &task.test)] {
        let (matrix, mut warns) = build_label_matrix(corpus, &lfs, &task.schema)?;
        warnings.append(&mut warns);
        matrix.write_binary(out.join(format!("lf.{split}.matrix")))?;
    }
    Ok(warnings)
}

pub fn stage_fit(task: &LoadedTask, cfg: &PipelineConfig, out: &Path, seed: u64) -> Result<LabelModelParams> {
    let matrix = LabelMatrix::read_binary(out.join("lf.train.matrix"))?;
    let lm_cfg = LabelModelConfig { seed, ..cfg.label_model.clone() };
    let params = fit_label_model(&matrix, &lm_cfg, &task.schema)?;
    write_file(&out.join("label_model.json"), &params.to_json())?;
    Ok(params)
}

pub fn stage_predict(task: &LoadedTask, out: &Path) -> Result<()> {
    let params = LabelModelParams::from_json(
        &fs::read_to_string(out.join("label_model.json"))
            .map_err(|e| Error::io(out.join("label_model.json"), e))?,
    )?;
    for split in ["train", "test"] {
        let matrix = LabelMatrix::read_binary(out.join(format!("lf.{split}.matrix")))?;
        let dataset = predict_proba(&matrix, &params, &task.schema);
        write_file(&out.join(format!("soft.{split}.jsonl")), &dataset.to_jsonl())?;
    }
    Ok(())
}

pub fn stage_train(task: &LoadedTask, cfg: &PipelineConfig, out: &Path, seeds: &[u64]) -> Result<()> {
    if !cfg.end_model.enabled {
        return Ok(());
    }
    let soft = fs::read_to_string(out.join("soft.train.jsonl"))
        .map_err(|e| Error::io(out.join("soft.train.jsonl"), e))?;
    let dataset = ProbabilisticDataset::from_jsonl(&soft)?;
    write_file(
        &out.join("export.train.conll"),
        &export_dataset(&dataset, &task.train, &task.schema, ExportMode::HardConll)?,
    )?;
    for &seed in seeds {
        let em_cfg = EndModelConfig { seed, ..cfg.end_model.config.clone() };
        let (model, _losses, _warns) = train_noise_aware(&dataset, &task.train, &task.schema, &em_cfg)?;
        model.write_binary(out.join(format!("end_model.seed{seed}.bin")))?;
    }
    Ok(())
}

pub fn stage_eval(task: &LoadedTask, cfg: &PipelineConfig, out: &Path, seeds: &[u64]) -> Result<String> {
    let schema = &task.schema;
    let mode = cfg.eval_mode;
    let test_matrix = LabelMatrix::read_binary(out.join("lf.test.matrix"))?;

    let mv = majority_vote(&test_matrix, schema);
    let mv_report = evaluate_labels(&mv, &task.test, schema, mode)?;
    write_file(&out.join("eval.mv.json"), &serde_json::to_string_pretty(&mv_report).unwrap())?;
    write_file(&out.join("eval.mv.txt"), &mv_report.to_text())?;

    let soft_test = ProbabilisticDataset::from_jsonl(
        &fs::read_to_string(out.join("soft.test.jsonl"))
            .map_err(|e| Error::io(out.join("soft.test.jsonl"), e))?,
    )?;
    let lm = lm_hard_labels(&soft_test, schema);
    let lm_report = evaluate_labels(&lm, &task.test, schema, mode)?;
    write_file(&out.join("eval.lm.json"), &serde_json::to_string_pretty(&lm_report).unwrap())?;
    write_file(&out.join("eval.lm.txt"), &lm_report.to_text())?;

    let mut ws_reports = Vec::new();
    if cfg.end_model.enabled {
        for &seed in seeds {
            let model = LinearTokenModel::read_binary(out.join(format!("end_model.seed{seed}.bin")))?;
            let tags = predict_tags(&model, &task.test);
            let report = evaluate_labels(&tags, &task.test, schema, mode)?;
            write_file(
                &out.join(format!("eval.ws.seed{seed}.json")),
                &serde_json::to_string_pretty(&report).unwrap(),
            )?;
            write_file(&out.join(format!("eval.ws.seed{seed}.txt")), &report.to_text())?;
            ws_reports.push(report);
        }
    }

    let report_text = render_report(&mv_report, &lm_report, &ws_reports);
    write_file(&out.join("report.txt"), &report_text)?;
    Ok(report_text)
}

/// Mean +/- SD table over models, one line per model.
fn render_report(mv: &EvalReport, lm: &EvalReport, ws: &[EvalReport]) -> String {
    let mut out = String::from("model\tn\tprecision\trecall\tf1\n");
    let line = |name: &str, reports: &[&EvalReport]| -> String {
        let p = summarize(&reports.iter().map(|r| r.precision).collect::<Vec<_>>());
        let r = summarize(&reports.iter().map(|r| r.recall).collect::<Vec<_>>());
        let f = summarize(&reports.iter().map(|r| r.f1).collect::<Vec<_>>());
        format!(
            "{name}\t{}\t{:.4} ±{:.4}\t{:.4} ±{:.4}\t{:.4} ±{:.4}\n",
            reports.len(),
            p.mean,
            p.sd,
            r.mean,
            r.sd,
            f.mean,
            f.sd
        )
    };
    out.push_str(&line("mv", &[mv]));
    out.push_str(&line("lm", &[lm]));
    if !ws.is_empty() {
        let refs: Vec<&EvalReport> = ws.iter().collect();
        out.push_str(&line("ws", &refs));
    }
    out
}

/// Aggregate existing eval files in a run directory into `report.txt`.
pub fn stage_report(out: &Path) -> Result<String> {
    let read_report = |name: &str| -> Result<EvalReport> {
        let data = fs::read_to_string(out.join(name)).map_err(|e| Error::io(out.join(name), e))?;
        serde_json::from_str(&data).map_err(|e| Error::config(format!("{name}: {e}")))
    };
    let mv = read_report("eval.mv.json")?;
    let lm = read_report("eval.lm.json")?;
    let mut ws = Vec::new();
    let mut names: Vec<String> = fs::read_dir(out)
        .map_err(|e| Error::io(out, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().to_string())
        .filter(|n| n.starts_with("eval.ws.seed") && n.ends_with(".json"))
        .collect();
    names.sort();
    for name in names {
        ws.push(read_report(&name)?);
    }
    let text = render_report(&mv, &lm, &ws);
    write_file(&out.join("report.txt"), &text)?;
    Ok(text)
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub config_sha256: String,
    /// Wall-clock creation time (unix seconds); the only field allowed to
    /// differ between otherwise identical runs.
    pub created_unix: u64,
    pub files: BTreeMap<String, String>,
}

/// Hash every file in the run directory (except the manifest itself) and
/// write `manifest.json`.
pub fn write_manifest(out: &Path, config_bytes: &[u8]) -> Result<()> {
    let mut files = BTreeMap::new();
    let mut stack = vec![out.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let mut entries: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(|e| Error::io(&dir, e))?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .collect();
        entries.sort();
        for path in entries {
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(out).unwrap().to_string_lossy().to_string();
                if rel == "manifest.json" {
                    continue;
                }
                let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
                files.insert(rel, sha256_hex(&bytes));
            }
        }
    }
    let manifest = Manifest {
        tool: TOOL_VERSION.to_string(),
        config_sha256: sha256_hex(config_bytes),
        created_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        files,
    };
    write_file(&out.join("manifest.json"), &serde_json::to_string_pretty(&manifest).unwrap())
}

// ---------------------------------------------------------------------------
// Whole-pipeline drivers
// ---------------------------------------------------------------------------

fn fail_marker(out: &Path, err: &StageError) {
    let _ = fs::create_dir_all(out);
    let _ = fs::write(out.join("FAILED"), format!("{err}\n"));
}

/// Run ingest -> label -> fit -> predict -> train -> eval into `out`.
/// On error the partial outputs are retained together with a `FAILED`
/// marker naming the stage.
pub fn run_pipeline(
    config_path: &Path,
    out: &Path,
    seed_override: Option<Vec<u64>>,
) -> std::result::Result<String, StageError> {
    let run = || -> std::result::Result<String, StageError> {
        let mut cfg = PipelineConfig::load(config_path).at(Stage::Ingest)?;
        if let Some(seeds) = seed_override {
            cfg.seeds = seeds;
        }
        let seeds = cfg.seeds.clone();
        let task = load_task(&cfg).at(Stage::Ingest)?;
        fs::create_dir_all(out).map_err(|e| Error::io(out, e)).at(Stage::Ingest)?;
        stage_ingest(&task, out).at(Stage::Ingest)?;
        stage_label(&task, &cfg, out).at(Stage::Label)?;
        stage_fit(&task, &cfg, out, seeds[0]).at(Stage::Fit)?;
        stage_predict(&task, out).at(Stage::Predict)?;
        stage_train(&task, &cfg, out, &seeds).at(Stage::Train)?;
        let report = stage_eval(&task, &cfg, out, &seeds).at(Stage::Eval)?;
        let config_bytes = fs::read(config_path).map_err(|e| Error::io(config_path, e)).at(Stage::Report)?;
        write_manifest(out, &config_bytes).at(Stage::Report)?;
        Ok(report)
    };
    run().inspect_err(|e| fail_marker(out, e))
}

/// One row of a partition sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub s: usize,
    pub mv_f1: f64,
    pub lm_f1: f64,
}

/// Refit the ontology labeling functions for each `s`, evaluate majority
/// vote and the label model on the validation split, and emit a
/// plot-ready table (also written to `sweep.tsv` under `out`).
pub fn sweep_partitions(
    config_path: &Path,
    out: &Path,
    s_values: &[usize],
) -> std::result::Result<Vec<SweepRow>, StageError> {
    let cfg = PipelineConfig::load(config_path).at(Stage::Ingest)?;
    let task = load_task(&cfg).at(Stage::Ingest)?;
    if let Some(&bad) = s_values.iter().find(|&&s| s == 0 || s > task.terminologies.len()) {
        return Err(StageError {
            stage: Stage::Label,
            source: Error::config(format!(
                "sweep s={bad} out of range 1..={}",
                task.terminologies.len()
            )),
        });
    }
    let mut rows = Vec::with_capacity(s_values.len());
    for &s in s_values {
        let lfs = build_labeling_functions(&task, &cfg, s).at(Stage::Label)?;
        let (train_matrix, _) = build_label_matrix(&task.train, &lfs, &task.schema).at(Stage::Label)?;
        let (val_matrix, _) = build_label_matrix(&task.validation, &lfs, &task.schema).at(Stage::Label)?;
        let params = fit_label_model(&train_matrix, &cfg.label_model, &task.schema).at(Stage::Fit)?;

        let mv = majority_vote(&val_matrix, &task.schema);
        let mv_f1 = evaluate_labels(&mv, &task.validation, &task.schema, cfg.eval_mode)
            .at(Stage::Eval)?
            .f1;
        let soft = predict_proba(&val_matrix, &params, &task.schema);
        let lm = lm_hard_labels(&soft, &task.schema);
        let lm_f1 = evaluate_labels(&lm, &task.validation, &task.schema, cfg.eval_mode)
            .at(Stage::Eval)?
            .f1;
        rows.push(SweepRow { s, mv_f1, lm_f1 });
    }
    let mut table = String::from("s\tmv_f1\tlm_f1\n");
    for row in &rows {
        table.push_str(&format!("{}\t{:.6}\t{:.6}\n", row.s, row.mv_f1, row.lm_f1));
    }
    fs::create_dir_all(out).map_err(|e| Error::io(out, e)).at(Stage::Eval)?;
    write_file(&out.join("sweep.tsv"), &table).at(Stage::Eval)?;
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Corpus search
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SearchQuery {
    pub pattern: String,
    pub window: usize,
    pub with_votes: bool,
}

/// Search the training corpus for a pattern and list every match with
/// token context, in (document, offset) order. With labeling functions
/// given, each context token is annotated with its current votes
/// (abstains rendered as a middle dot).
pub fn search_corpus(
    corpus: &Corpus,
    query: &SearchQuery,
    lfs: Option<(&[LabelingFunction], &TaskSchema)>,
) -> Result<String> {
    let re = RegexBuilder::new(&query.pattern)
        .case_insensitive(true)
        .build()
        .map_err(|e| Error::config(format!("bad search pattern `{}`: {e}", query.pattern)))?;

    let mut out = String::new();
    for doc in &corpus.documents {
        let votes: Option<Vec<Vec<Vec<i8>>>> = match &lfs {
            Some((functions, schema)) => {
                let mut per_lf = Vec::new();
                for lf in functions.iter().filter(|lf| !lf.is_span_level()) {
                    per_lf.push(lf.apply_tokens(doc, schema)?);
                }
                // transpose to sentence -> token -> lf
                let mut by_sentence: Vec<Vec<Vec<i8>>> = doc
                    .sentences
                    .iter()
                    .map(|s| vec![Vec::new(); s.tokens.len()])
                    .collect();
                for lf_votes in &per_lf {
                    for (si, sent_votes) in lf_votes.iter().enumerate() {
                        for (ti, &v) in sent_votes.iter().enumerate() {
                            by_sentence[si][ti].push(v);
                        }
                    }
                }
                Some(by_sentence)
            }
            None => None,
        };
        for (si, sent) in doc.sentences.iter().enumerate() {
            let st = crate::labelers::matcher::SentenceText::of(doc, si);
            for m in re.find_iter(&st.text) {
                let cs = st.byte_to_char(m.start());
                let ce = st.byte_to_char(m.end());
                let covered = st.covering_tokens(cs, ce);
                let (Some(&first), Some(&last)) = (covered.first(), covered.last()) else {
                    continue;
                };
                let lo = first.saturating_sub(query.window);
                let hi = (last + 1 + query.window).min(sent.tokens.len());
                let mut rendered: Vec<String> = Vec::new();
                for t in lo..hi {
                    let text = &sent.tokens[t].text;
                    if t == first {
                        rendered.push(format!("[{text}"));
                    } else {
                        rendered.push(text.clone());
                    }
                    if t == last {
                        let end = rendered.len() - 1;
                        rendered[end] = format!("{}]", rendered[end]);
                    }
                }
                out.push_str(&format!("{}\ts{}\t[{},{})\t{}\n", doc.id, si, cs, ce, rendered.join(" ")));
                if query.with_votes
                    && let Some(by_sentence) = &votes
                {
                    for (t, token_votes) in by_sentence[si].iter().enumerate().take(hi).skip(lo) {
                        let marks: Vec<String> = token_votes
                            .iter()
                            .map(|&v| if v == ABSTAIN { "·".to_string() } else { v.to_string() })
                            .collect();
                        out.push_str(&format!("  {}\t{}\n", sent.tokens[t].text, marks.join(" ")));
                    }
                }
            }
        }
    }
    Ok(out)
}
