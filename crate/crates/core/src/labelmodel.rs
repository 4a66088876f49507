//! Consensus labeling: majority vote, and a label model that recovers
//! per-source accuracies from vote agreement rates without ground truth.
//!
//! Accuracies live on the correlation scale `a = E[lambda * Y]` under a
//! +/-1 encoding (probability accuracy `(1+a)/2`). Pairwise products of
//! co-votes estimate `a_i * a_j`, so closed-form triplets recover each
//! `|a_i|`; the better-than-random assumption picks the positive root.
//! Triplet medians are then refined by full-batch gradient descent on the
//! moment-matching objective. Moments are conditioned on both sources
//! voting, which matches `E[lambda_i Y lambda_j Y]` when coverage is
//! independent of the true label.

use serde::{Deserialize, Serialize};

use crate::corpus::{ABSTAIN, TaskSchema};
use crate::error::{Error, Result};
use crate::labelers::matrix::{LabelMatrix, RowRef};

/// Moments smaller than this cannot sit in a triplet denominator.
const MIN_MOMENT: f64 = 1e-6;
/// Correlation-scale clipping bound, keeping log-weights finite.
const ACCURACY_CLIP: f64 = 0.98;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LabelModelConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    /// Uniform probability-scale accuracy prior in `[0.5, 1)`; also the
    /// fallback estimate for sources with no usable triplet.
    pub accuracy_prior: f64,
    /// Recorded for reproducibility; fitting is deterministic full-batch
    /// gradient descent, so the seed does not alter the result.
    pub seed: u64,
}

impl Default for LabelModelConfig {
    fn default() -> Self {
        LabelModelConfig {
            learning_rate: 0.01,
            epochs: 200,
            l2: 1e-4,
            accuracy_prior: 0.7,
            seed: 0,
        }
    }
}

impl LabelModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("label model epochs must be >= 1"));
        }
        if !(0.5..1.0).contains(&self.accuracy_prior) {
            return Err(Error::config("accuracy_prior must lie in [0.5, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceParams {
    pub name: String,
    /// Correlation-scale accuracy per class (one-vs-rest; identical
    /// columns for binary tasks).
    pub accuracies: Vec<f64>,
    /// Observed vote rate.
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelModelParams {
    pub sources: Vec<SourceParams>,
    pub class_prior: Vec<f64>,
    pub warnings: Vec<String>,
}

impl LabelModelParams {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("params serialize")
    }

    pub fn from_json(data: &str) -> Result<LabelModelParams> {
        serde_json::from_str(data).map_err(|e| Error::config(format!("bad label model params: {e}")))
    }
}

/// Per-token posterior class distributions aligned to matrix rows. Tokens
/// where every source abstained are masked and carry the class prior.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilisticDataset {
    pub posteriors: Vec<Vec<f64>>,
    pub mask: Vec<bool>,
    pub rows: Vec<RowRef>,
    pub doc_ids: Vec<String>,
}

/// Per-token mode over non-abstain votes; ties and all-abstain rows fall
/// back to the schema default class.
pub fn majority_vote(matrix: &LabelMatrix, schema: &TaskSchema) -> Vec<usize> {
    let mut out = Vec::with_capacity(matrix.n);
    for r in 0..matrix.n {
        let mut counts = vec![0usize; schema.k];
        for &v in matrix.row(r) {
            if v != ABSTAIN {
                counts[v as usize] += 1;
            }
        }
        out.push(unique_mode(&counts).unwrap_or(schema.default_class));
    }
    out
}

/// Index of the strict maximum of `counts`, if the maximum is unique and
/// non-zero.
fn unique_mode(counts: &[usize]) -> Option<usize> {
    let best = *counts.iter().max()?;
    if best == 0 {
        return None;
    }
    let mut it = counts.iter().enumerate().filter(|&(_, &c)| c == best);
    let (idx, _) = it.next()?;
    if it.next().is_some() { None } else { Some(idx) }
}

/// Pairwise co-vote moments under a one-vs-rest +/-1 encoding of class
/// `class`: `O[i][j]` is the mean of the vote products over rows where
/// sources `i` and `j` both vote, with the co-vote counts alongside.
pub fn pairwise_moments(matrix: &LabelMatrix, class: usize) -> (Vec<Vec<f64>>, Vec<Vec<usize>>) {
    let m = matrix.m;
    let mut sums = vec![vec![0f64; m]; m];
    let mut counts = vec![vec![0usize; m]; m];
    for r in 0..matrix.n {
        let row = matrix.row(r);
        for i in 0..m {
            let vi = row[i];
            if vi == ABSTAIN {
                continue;
            }
            let ei = if vi as usize == class { 1.0 } else { -1.0 };
            for j in i + 1..m {
                let vj = row[j];
                if vj == ABSTAIN {
                    continue;
                }
                let ej = if vj as usize == class { 1.0 } else { -1.0 };
                sums[i][j] += ei * ej;
                counts[i][j] += 1;
            }
        }
    }
    let mut moments = vec![vec![0f64; m]; m];
    for i in 0..m {
        for j in i + 1..m {
            if counts[i][j] > 0 {
                let o = sums[i][j] / counts[i][j] as f64;
                moments[i][j] = o;
                moments[j][i] = o;
                counts[j][i] = counts[i][j];
            }
        }
    }
    (moments, counts)
}

/// Closed-form accuracy recovery: for each source, the median over all
/// valid triplets of `sqrt(|O_ij * O_ik / O_jk|)`, taking the positive
/// root. Sources with no valid triplet fall back to the prior with a
/// warning. This is the pre-refinement estimate.
pub fn accuracies_from_moments(
    moments: &[Vec<f64>],
    counts: &[Vec<usize>],
    source_names: &[String],
    accuracy_prior: f64,
) -> (Vec<f64>, Vec<String>) {
    let m = moments.len();
    let prior_corr = 2.0 * accuracy_prior - 1.0;
    let mut out = Vec::with_capacity(m);
    let mut warnings = Vec::new();
    for i in 0..m {
        let mut estimates = Vec::new();
        for j in 0..m {
            if j == i || counts[i][j] == 0 {
                continue;
            }
            for k in j + 1..m {
                if k == i || counts[i][k] == 0 || counts[j][k] == 0 {
                    continue;
                }
                if moments[j][k].abs() < MIN_MOMENT {
                    continue;
                }
                let est = (moments[i][j] * moments[i][k] / moments[j][k]).abs().sqrt();
                estimates.push(est.min(ACCURACY_CLIP));
            }
        }
        if estimates.is_empty() {
            warnings.push(format!(
                "source `{}`: no usable triplet (all pair moments below {MIN_MOMENT}); using prior",
                source_names.get(i).map(String::as_str).unwrap_or("?")
            ));
            out.push(prior_corr);
        } else {
            out.push(median(&mut estimates));
        }
    }
    (out, warnings)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Full-batch gradient descent on
/// `sum_{i<j} (O_ij - a_i a_j)^2 + l2 * sum_i (a_i - a_prior)^2`,
/// initialized at the triplet estimates. Deterministic.
fn refine_accuracies(
    init: &[f64],
    moments: &[Vec<f64>],
    counts: &[Vec<usize>],
    cfg: &LabelModelConfig,
) -> Vec<f64> {
    let m = init.len();
    let prior_corr = 2.0 * cfg.accuracy_prior - 1.0;
    let mut a = init.to_vec();
    for _ in 0..cfg.epochs {
        let mut grad = vec![0f64; m];
        for i in 0..m {
            for j in i + 1..m {
                if counts[i][j] == 0 {
                    continue;
                }
                let r = moments[i][j] - a[i] * a[j];
                grad[i] += -2.0 * r * a[j];
                grad[j] += -2.0 * r * a[i];
            }
        }
        for i in 0..m {
            grad[i] += 2.0 * cfg.l2 * (a[i] - prior_corr);
            a[i] = (a[i] - cfg.learning_rate * grad[i]).clamp(-ACCURACY_CLIP, ACCURACY_CLIP);
        }
    }
    a
}

/// Fit per-source, per-class accuracies and the class prior from the label
/// matrix alone. Requires at least 3 sources.
pub fn fit_label_model(
    matrix: &LabelMatrix,
    cfg: &LabelModelConfig,
    schema: &TaskSchema,
) -> Result<LabelModelParams> {
    cfg.validate()?;
    if matrix.m < 3 {
        return Err(Error::LabelModel(format!(
            "need at least 3 sources to estimate accuracies; have {}",
            matrix.m
        )));
    }
    if matrix.n == 0 {
        return Err(Error::LabelModel("empty label matrix".into()));
    }

    let mut warnings = Vec::new();
    let mut per_class: Vec<Vec<f64>> = Vec::with_capacity(schema.k);
    for class in 0..schema.k {
        let (moments, counts) = pairwise_moments(matrix, class);
        let (est, mut warns) =
            accuracies_from_moments(&moments, &counts, &matrix.source_names, cfg.accuracy_prior);
        for w in &mut warns {
            *w = format!("class {class}: {w}");
        }
        warnings.append(&mut warns);
        let refined = refine_accuracies(&est, &moments, &counts, cfg);
        for (i, &a) in refined.iter().enumerate() {
            if a.abs() >= ACCURACY_CLIP {
                warnings.push(format!(
                    "class {class}: source `{}` accuracy clipped at {ACCURACY_CLIP}",
                    matrix.source_names[i]
                ));
            }
        }
        per_class.push(refined);
    }

    // Class prior from majority-vote label frequencies (add-one smoothed so
    // every class keeps positive mass).
    let mv = majority_vote(matrix, schema);
    let mut counts = vec![1usize; schema.k];
    for &label in &mv {
        counts[label] += 1;
    }
    let total: usize = counts.iter().sum();
    let class_prior: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();

    let coverage = matrix.coverage();
    let sources = (0..matrix.m)
        .map(|i| SourceParams {
            name: matrix.source_names[i].clone(),
            accuracies: (0..schema.k).map(|c| per_class[c][i]).collect(),
            coverage: coverage[i],
        })
        .collect();
    Ok(LabelModelParams { sources, class_prior, warnings })
}

/// Naive-Bayes posterior per token: prior times, for every non-abstaining
/// source, `acc` if it voted the hypothesis class and `(1-acc)/(k-1)`
/// otherwise, with `acc = (1 + a)/2` for the hypothesis class. All-abstain
/// tokens are masked and assigned the prior.
pub fn predict_proba(
    matrix: &LabelMatrix,
    params: &LabelModelParams,
    schema: &TaskSchema,
) -> ProbabilisticDataset {
    let k = schema.k;
    let mut posteriors = Vec::with_capacity(matrix.n);
    let mut mask = Vec::with_capacity(matrix.n);
    for r in 0..matrix.n {
        let row = matrix.row(r);
        if row.iter().all(|&v| v == ABSTAIN) {
            posteriors.push(params.class_prior.clone());
            mask.push(true);
            continue;
        }
        let mut logp: Vec<f64> = params.class_prior.iter().map(|p| p.ln()).collect();
        for (i, &v) in row.iter().enumerate() {
            if v == ABSTAIN {
                continue;
            }
            for (y, lp) in logp.iter_mut().enumerate() {
                let acc = (1.0 + params.sources[i].accuracies[y]) / 2.0;
                let p = if v as usize == y { acc } else { (1.0 - acc) / (k - 1) as f64 };
                *lp += p.ln();
            }
        }
        let max = logp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut probs: Vec<f64> = logp.iter().map(|lp| (lp - max).exp()).collect();
        let sum: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= sum;
        }
        posteriors.push(probs);
        mask.push(false);
    }
    ProbabilisticDataset {
        posteriors,
        mask,
        rows: matrix.rows.clone(),
        doc_ids: matrix.doc_ids.clone(),
    }
}

/// Argmax of each posterior; masked tokens and exact ties default.
pub fn lm_hard_labels(dataset: &ProbabilisticDataset, schema: &TaskSchema) -> Vec<usize> {
    dataset
        .posteriors
        .iter()
        .zip(&dataset.mask)
        .map(|(post, &masked)| {
            if masked {
                return schema.default_class;
            }
            crate::ontology::argmax_unique(post).unwrap_or(schema.default_class)
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct SoftRecord {
    doc_id: String,
    sentence: usize,
    token: usize,
    posterior: Vec<f64>,
    masked: bool,
}

impl ProbabilisticDataset {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for (i, post) in self.posteriors.iter().enumerate() {
            let r = &self.rows[i];
            let rec = SoftRecord {
                doc_id: self.doc_ids[r.doc].clone(),
                sentence: r.sentence,
                token: r.token,
                posterior: post.clone(),
                masked: self.mask[i],
            };
            out.push_str(&serde_json::to_string(&rec).expect("record serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(data: &str) -> Result<ProbabilisticDataset> {
        let mut posteriors = Vec::new();
        let mut mask = Vec::new();
        let mut rows = Vec::new();
        let mut doc_ids: Vec<String> = Vec::new();
        for (lineno, line) in data.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: SoftRecord = serde_json::from_str(line).map_err(|e| {
                Error::config(format!("bad soft-label record on line {}: {e}", lineno + 1))
            })?;
            let doc = match doc_ids.iter().position(|d| *d == rec.doc_id) {
                Some(i) => i,
                None => {
                    doc_ids.push(rec.doc_id.clone());
                    doc_ids.len() - 1
                }
            };
            rows.push(RowRef { doc, sentence: rec.sentence, token: rec.token });
            posteriors.push(rec.posterior);
            mask.push(rec.masked);
        }
        Ok(ProbabilisticDataset { posteriors, mask, rows, doc_ids })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn schema2() -> TaskSchema {
        TaskSchema::binary("ENT")
    }

    /// In-memory matrix over synthetic row references.
    fn matrix_of(rows: &[Vec<i8>]) -> LabelMatrix {
        let n = rows.len();
        let m = rows.first().map(Vec::len).unwrap_or(0);
        LabelMatrix {
            n,
            m,
            values: rows.iter().flatten().copied().collect(),
            source_names: (0..m).map(|j| format!("lf{j}")).collect(),
            rows: (0..n).map(|i| RowRef { doc: 0, sentence: 0, token: i }).collect(),
            doc_ids: vec!["rows".to_string()],
        }
    }

    #[test]
    fn majority_vote_mode_ties_and_abstains() {
        let schema = schema2();
        let m = matrix_of(&[vec![1, 1, 0, -1], vec![1, 0, -1, -1], vec![-1, -1, -1, -1]]);
        assert_eq!(majority_vote(&m, &schema), vec![1, 0, 0]);
    }

    #[test]
    fn triplet_recovery_is_exact_on_analytic_moments() {
        let o = vec![
            vec![0.0, 0.48, 0.32],
            vec![0.48, 0.0, 0.24],
            vec![0.32, 0.24, 0.0],
        ];
        let counts = vec![vec![1usize; 3]; 3];
        let names: Vec<String> = (0..3).map(|i| format!("lf{i}")).collect();
        let (a, warnings) = accuracies_from_moments(&o, &counts, &names, 0.7);
        assert!(warnings.is_empty());
        assert!((a[0] - 0.8).abs() < 1e-12, "{}", a[0]);
        assert!((a[1] - 0.6).abs() < 1e-12, "{}", a[1]);
        assert!((a[2] - 0.4).abs() < 1e-12, "{}", a[2]);
    }

    #[test]
    fn tiny_denominator_falls_back_to_prior() {
        let o = vec![
            vec![0.0, 0.4, 0.4],
            vec![0.4, 0.0, 0.0],
            vec![0.4, 0.0, 0.0],
        ];
        let counts = vec![vec![1usize; 3]; 3];
        let names: Vec<String> = (0..3).map(|i| format!("lf{i}")).collect();
        let (a, warnings) = accuracies_from_moments(&o, &counts, &names, 0.7);
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("lf0"));
        assert!((a[0] - 0.4).abs() < 1e-12); // 2 * 0.7 - 1
        assert!(a[1].abs() < 1e-12);
        assert!(a[2].abs() < 1e-12);
    }

    #[test]
    fn identical_columns_clip_with_warning() {
        let schema = schema2();
        let rows: Vec<Vec<i8>> = (0..200)
            .map(|i| {
                let v = (i % 3 == 0) as i8;
                vec![v, v, v]
            })
            .collect();
        let m = matrix_of(&rows);
        let params = fit_label_model(&m, &LabelModelConfig::default(), &schema).unwrap();
        for s in &params.sources {
            assert!((s.accuracies[1] - ACCURACY_CLIP).abs() < 1e-9);
        }
        assert!(params.warnings.iter().any(|w| w.contains("clipped")));
    }

    #[test]
    fn fit_requires_three_sources() {
        let schema = schema2();
        let m = matrix_of(&[vec![1, 0], vec![0, 1]]);
        assert!(matches!(
            fit_label_model(&m, &LabelModelConfig::default(), &schema),
            Err(Error::LabelModel(_))
        ));
    }

    #[test]
    fn fit_rejects_bad_config() {
        let schema = schema2();
        let m = matrix_of(&[vec![1, 0, 1]]);
        let mut cfg = LabelModelConfig { epochs: 0, ..Default::default() };
        assert!(fit_label_model(&m, &cfg, &schema).is_err());
        cfg.epochs = 1;
        cfg.accuracy_prior = 0.3;
        assert!(fit_label_model(&m, &cfg, &schema).is_err());
    }

    fn params_with(accs: &[f64], prior: &[f64]) -> LabelModelParams {
        LabelModelParams {
            sources: accs
                .iter()
                .enumerate()
                .map(|(i, &a)| SourceParams {
                    name: format!("lf{i}"),
                    accuracies: vec![a; prior.len()],
                    coverage: 1.0,
                })
                .collect(),
            class_prior: prior.to_vec(),
            warnings: vec![],
        }
    }

    #[test]
    fn posterior_two_agreeing_sources() {
        // acc 0.8 both vote 1, uniform prior: 0.32 / (0.32 + 0.02)
        let schema = schema2();
        let m = matrix_of(&[vec![1, 1]]);
        let params = params_with(&[0.6, 0.6], &[0.5, 0.5]);
        let d = predict_proba(&m, &params, &schema);
        assert!((d.posteriors[0][1] - 0.32 / 0.34).abs() < 1e-9);
        assert!(!d.mask[0]);
    }

    #[test]
    fn posterior_disagreeing_sources() {
        // accs (0.9, 0.6), votes (1, 0), uniform prior: 0.36 / 0.42
        let schema = schema2();
        let m = matrix_of(&[vec![1, 0]]);
        let params = params_with(&[0.8, 0.2], &[0.5, 0.5]);
        let d = predict_proba(&m, &params, &schema);
        assert!((d.posteriors[0][1] - 0.36 / 0.42).abs() < 1e-9);
    }

    #[test]
    fn all_abstain_is_masked_prior() {
        let schema = schema2();
        let m = matrix_of(&[vec![-1, -1]]);
        let params = params_with(&[0.6, 0.6], &[0.3, 0.7]);
        let d = predict_proba(&m, &params, &schema);
        assert_eq!(d.posteriors[0], vec![0.3, 0.7]);
        assert!(d.mask[0]);
        assert_eq!(lm_hard_labels(&d, &schema), vec![0]);
    }

    #[test]
    fn hard_labels_argmax_tie_and_mask() {
        let schema = schema2();
        let d = ProbabilisticDataset {
            posteriors: vec![vec![0.1, 0.9], vec![0.5, 0.5], vec![0.2, 0.8]],
            mask: vec![false, false, true],
            rows: (0..3).map(|i| RowRef { doc: 0, sentence: 0, token: i }).collect(),
            doc_ids: vec!["d".into()],
        };
        assert_eq!(lm_hard_labels(&d, &schema), vec![1, 0, 0]);
    }

    #[test]
    fn posteriors_normalize() {
        let schema = TaskSchema::new(vec!["O".into(), "A".into(), "B".into()], 0).unwrap();
        let m = matrix_of(&[vec![1, 2, -1], vec![0, 0, 2], vec![2, 2, 2]]);
        let params = LabelModelParams {
            sources: (0..3)
                .map(|i| SourceParams {
                    name: format!("lf{i}"),
                    accuracies: vec![0.5, 0.6, 0.7],
                    coverage: 1.0,
                })
                .collect(),
            class_prior: vec![0.5, 0.25, 0.25],
            warnings: vec![],
        };
        let d = predict_proba(&m, &params, &schema);
        for post in &d.posteriors {
            assert!((post.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn fit_is_deterministic() {
        let schema = schema2();
        let rows: Vec<Vec<i8>> = (0..500)
            .map(|i| vec![(i % 2) as i8, ((i / 2) % 2) as i8, ((i / 3) % 2) as i8])
            .collect();
        let m = matrix_of(&rows);
        let cfg = LabelModelConfig::default();
        let p1 = fit_label_model(&m, &cfg, &schema).unwrap();
        let p2 = fit_label_model(&m, &cfg, &schema).unwrap();
        assert_eq!(p1.to_json(), p2.to_json());
    }

    #[test]
    fn soft_jsonl_round_trips_bit_exactly() {
        let schema = schema2();
        let m = matrix_of(&[vec![1, 0, 1], vec![0, 0, -1], vec![-1, -1, -1]]);
        let params = params_with(&[0.8123456789012345, 0.3, 0.55], &[0.4, 0.6]);
        let d = predict_proba(&m, &params, &schema);
        let text = d.to_jsonl();
        let back = ProbabilisticDataset::from_jsonl(&text).unwrap();
        assert_eq!(d.posteriors, back.posteriors);
        assert_eq!(d.mask, back.mask);
    }

    proptest! {
        /// With equal accuracies and a uniform prior, the posterior argmax
        /// agrees with majority vote wherever the vote mode is unique.
        #[test]
        fn equal_accuracy_reduces_to_majority_vote(
            rows in proptest::collection::vec(proptest::collection::vec(-1i8..2, 5), 1..40),
            acc in 0.05f64..0.9,
        ) {
            let schema = schema2();
            let m = matrix_of(&rows);
            let params = params_with(&[acc; 5], &[0.5, 0.5]);
            let d = predict_proba(&m, &params, &schema);
            let lm = lm_hard_labels(&d, &schema);
            let mv = majority_vote(&m, &schema);
            for (r, row) in rows.iter().enumerate() {
                let mut counts = [0usize; 2];
                for &v in row {
                    if v >= 0 { counts[v as usize] += 1; }
                }
                let unique = counts[0] != counts[1] && (counts[0] + counts[1]) > 0;
                if unique {
                    prop_assert_eq!(lm[r], mv[r]);
                }
            }
        }

        /// Raising one source's accuracy never lowers the posterior of the
        /// class it voted for.
        #[test]
        fn monotone_in_source_accuracy(
            row in proptest::collection::vec(-1i8..2, 4),
            accs in proptest::collection::vec(0.05f64..0.9, 4),
            bump in 0.01f64..0.08,
            which in 0usize..4,
        ) {
            prop_assume!(row[which] >= 0);
            let schema = schema2();
            let m = matrix_of(std::slice::from_ref(&row));
            let voted = row[which] as usize;

            let base = params_with(&accs, &[0.5, 0.5]);
            let mut bumped_accs = accs.clone();
            bumped_accs[which] = (bumped_accs[which] + bump).min(0.96);
            let bumped = params_with(&bumped_accs, &[0.5, 0.5]);

            let p0 = predict_proba(&m, &base, &schema).posteriors[0][voted];
            let p1 = predict_proba(&m, &bumped, &schema).posteriors[0][voted];
            prop_assert!(p1 >= p0 - 1e-12);
        }
    }
}
