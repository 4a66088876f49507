//! A linear softmax token classifier over hashed features, trained on
//! probabilistic labels with the noise-aware expected cross entropy:
//! `loss = mean over unmasked tokens of -sum_y p_hat(y) * log softmax(Wx)_y`.
//! Masked tokens (where every source abstained) contribute nothing to the
//! loss or gradient.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, TaskSchema};
use crate::error::{Error, Result};
use crate::labelmodel::ProbabilisticDataset;
use crate::metrics::io_to_bio;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndModelConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub seed: u64,
    /// Hashed feature space is `2^dim_bits` wide.
    pub dim_bits: u32,
    pub batch_size: usize,
}

impl Default for EndModelConfig {
    fn default() -> Self {
        EndModelConfig {
            learning_rate: 0.5,
            epochs: 5,
            l2: 0.0,
            seed: 0,
            dim_bits: 18,
            batch_size: 32,
        }
    }
}

impl EndModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::EndModel("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::EndModel("batch size must be >= 1".into()));
        }
        if !(4..=26).contains(&self.dim_bits) {
            return Err(Error::EndModel("dim_bits must lie in 4..=26".into()));
        }
        Ok(())
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn shape_of(token: &str) -> String {
    let mut out = String::new();
    let mut last = '\0';
    for c in token.chars() {
        let s = if c.is_uppercase() {
            'X'
        } else if c.is_lowercase() {
            'x'
        } else if c.is_ascii_digit() {
            'd'
        } else {
            'p'
        };
        if s != last {
            out.push(s);
            last = s;
        }
    }
    out
}

/// Hashed feature indices for the token at `idx` within its sentence:
/// identity, lowercase form, 3-character prefix/suffix, shape, and
/// lowercase neighbors at offsets +/-1 and +/-2.
pub fn token_features(tokens: &[String], idx: usize, dim_bits: u32) -> Vec<u32> {
    let dim = 1u64 << dim_bits;
    let hash = |s: &str| (fnv1a(s.as_bytes()) % dim) as u32;
    let lower = tokens[idx].to_lowercase();
    let prefix: String = lower.chars().take(3).collect();
    let suffix: String = {
        let chars: Vec<char> = lower.chars().collect();
        chars[chars.len().saturating_sub(3)..].iter().collect()
    };
    let neighbor = |offset: i64| -> String {
        let pos = idx as i64 + offset;
        if pos < 0 {
            "<s>".to_string()
        } else if pos as usize >= tokens.len() {
            "</s>".to_string()
        } else {
            tokens[pos as usize].to_lowercase()
        }
    };
    vec![
        hash("b="),
        hash(&format!("w={}", tokens[idx])),
        hash(&format!("lw={lower}")),
        hash(&format!("p3={prefix}")),
        hash(&format!("s3={suffix}")),
        hash(&format!("sh={}", shape_of(&tokens[idx]))),
        hash(&format!("w-1={}", neighbor(-1))),
        hash(&format!("w+1={}", neighbor(1))),
        hash(&format!("w-2={}", neighbor(-2))),
        hash(&format!("w+2={}", neighbor(2))),
    ]
}

/// Feature vectors for every corpus token in deterministic row order.
pub fn corpus_features(corpus: &Corpus, dim_bits: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::with_capacity(corpus.num_tokens());
    for doc in &corpus.documents {
        for sent in &doc.sentences {
            let texts: Vec<String> = sent.tokens.iter().map(|t| t.text.clone()).collect();
            for idx in 0..texts.len() {
                out.push(token_features(&texts, idx, dim_bits));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearTokenModel {
    pub k: usize,
    pub dim: usize,
    /// Row-major `k x dim` weights.
    pub weights: Vec<f64>,
}

impl LinearTokenModel {
    pub fn zeros(k: usize, dim_bits: u32) -> LinearTokenModel {
        let dim = 1usize << dim_bits;
        LinearTokenModel { k, dim, weights: vec![0.0; k * dim] }
    }

    pub fn scores(&self, features: &[u32]) -> Vec<f64> {
        let mut scores = vec![0.0; self.k];
        for (c, s) in scores.iter_mut().enumerate() {
            let row = &self.weights[c * self.dim..(c + 1) * self.dim];
            for &f in features {
                *s += row[f as usize];
            }
        }
        scores
    }

    pub fn softmax(&self, features: &[u32]) -> Vec<f64> {
        softmax(&self.scores(features))
    }

    const MAGIC: &[u8; 4] = b"OLEM";

    pub fn write_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::with_capacity(20 + 8 * self.weights.len());
        buf.extend_from_slice(Self::MAGIC);
        buf.extend_from_slice(&(self.k as u64).to_le_bytes());
        buf.extend_from_slice(&(self.dim as u64).to_le_bytes());
        for w in &self.weights {
            buf.extend_from_slice(&w.to_le_bytes());
        }
        fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn read_binary(path: impl AsRef<Path>) -> Result<LinearTokenModel> {
        let path = path.as_ref();
        let buf = fs::read(path).map_err(|e| Error::io(path, e))?;
        if buf.len() < 20 || &buf[0..4] != Self::MAGIC {
            return Err(Error::Format { path: path.to_path_buf(), msg: "bad magic".into() });
        }
        let k = u64::from_le_bytes(buf[4..12].try_into().unwrap()) as usize;
        let dim = u64::from_le_bytes(buf[12..20].try_into().unwrap()) as usize;
        if buf.len() != 20 + 8 * k * dim {
            return Err(Error::Format { path: path.to_path_buf(), msg: "truncated weights".into() });
        }
        let weights = buf[20..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(LinearTokenModel { k, dim, weights })
    }
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Expected cross entropy and its exact gradient over one batch. Masked
/// tokens contribute zero loss and zero gradient; a fully masked batch has
/// loss 0 by definition.
pub fn noise_aware_loss_grad(
    model: &LinearTokenModel,
    features: &[Vec<u32>],
    posteriors: &[Vec<f64>],
    mask: &[bool],
) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; model.weights.len()];
    let n_unmasked = mask.iter().filter(|&&m| !m).count();
    if n_unmasked == 0 {
        return (0.0, grad);
    }
    let scale = 1.0 / n_unmasked as f64;
    let mut loss = 0.0;
    for ((x, post), &masked) in features.iter().zip(posteriors).zip(mask) {
        if masked {
            continue;
        }
        let probs = model.softmax(x);
        for y in 0..model.k {
            loss -= post[y] * probs[y].ln();
            let coeff = (probs[y] - post[y]) * scale;
            let row = y * model.dim;
            for &f in x {
                grad[row + f as usize] += coeff;
            }
        }
    }
    (loss * scale, grad)
}

/// Mini-batch gradient descent with a 10% linear warmup followed by linear
/// decay. Deterministic for a fixed seed; returns the per-epoch mean batch
/// loss alongside the model and any warnings.
pub fn train_noise_aware(
    dataset: &ProbabilisticDataset,
    corpus: &Corpus,
    schema: &TaskSchema,
    cfg: &EndModelConfig,
) -> Result<(LinearTokenModel, Vec<f64>, Vec<String>)> {
    cfg.validate()?;
    let n = corpus.num_tokens();
    if n == 0 {
        return Err(Error::EndModel("empty corpus".into()));
    }
    if dataset.posteriors.len() != n {
        return Err(Error::EndModel(format!(
            "dataset has {} rows but corpus has {n} tokens",
            dataset.posteriors.len()
        )));
    }

    let features = corpus_features(corpus, cfg.dim_bits);
    let mut model = LinearTokenModel::zeros(schema.k, cfg.dim_bits);
    let mut warnings = Vec::new();

    let n_batches = n.div_ceil(cfg.batch_size);
    let total_steps = cfg.epochs * n_batches;
    let warmup = (total_steps / 10).max(1);
    let lr_at = |step: usize| -> f64 {
        if step < warmup {
            cfg.learning_rate * (step + 1) as f64 / warmup as f64
        } else {
            cfg.learning_rate * (total_steps - step) as f64 / (total_steps - warmup).max(1) as f64
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut step = 0usize;
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let lr = lr_at(step);
            step += 1;
            let unmasked: Vec<usize> = batch.iter().copied().filter(|&i| !dataset.mask[i]).collect();
            if unmasked.is_empty() {
                warnings.push("batch fully masked: zero loss".to_string());
                continue;
            }
            let scale = 1.0 / unmasked.len() as f64;
            let mut batch_loss = 0.0;
            for &i in &unmasked {
                let x = &features[i];
                let post = &dataset.posteriors[i];
                let probs = model.softmax(x);
                for y in 0..model.k {
                    batch_loss -= post[y] * probs[y].ln();
                    let coeff = (probs[y] - post[y]) * scale;
                    let row = y * model.dim;
                    for &f in x {
                        let w = &mut model.weights[row + f as usize];
                        *w -= lr * (coeff + cfg.l2 * *w);
                    }
                }
            }
            epoch_loss += batch_loss * scale;
        }
        epoch_losses.push(epoch_loss / n_batches as f64);
    }
    Ok((model, epoch_losses, warnings))
}

/// Argmax tags for every corpus token, ties broken toward the lower class
/// index.
pub fn predict_tags(model: &LinearTokenModel, corpus: &Corpus) -> Vec<usize> {
    let mut out = Vec::with_capacity(corpus.num_tokens());
    for doc in &corpus.documents {
        for sent in &doc.sentences {
            let texts: Vec<String> = sent.tokens.iter().map(|t| t.text.clone()).collect();
            for idx in 0..texts.len() {
                let dim_bits = (model.dim as f64).log2() as u32;
                let scores = model.scores(&token_features(&texts, idx, dim_bits));
                let mut best = 0usize;
                let mut best_score = scores[0];
                for (c, &s) in scores.iter().enumerate().skip(1) {
                    if s > best_score {
                        best_score = s;
                        best = c;
                    }
                }
                out.push(best);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportMode {
    HardConll,
    SoftJsonl,
}

/// Serialize a probabilistic dataset for external training: `hard_conll`
/// emits `token BIO-tag` lines with blank lines between sentences (masked
/// tokens tagged `O`); `soft_jsonl` emits the full posteriors.
pub fn export_dataset(
    dataset: &ProbabilisticDataset,
    corpus: &Corpus,
    schema: &TaskSchema,
    mode: ExportMode,
) -> Result<String> {
    match mode {
        ExportMode::SoftJsonl => Ok(dataset.to_jsonl()),
        ExportMode::HardConll => {
            let n = corpus.num_tokens();
            if dataset.posteriors.len() != n {
                return Err(Error::EndModel(format!(
                    "dataset has {} rows but corpus has {n} tokens",
                    dataset.posteriors.len()
                )));
            }
            let labels = crate::labelmodel::lm_hard_labels(dataset, schema);
            let mut out = String::new();
            let mut flat = 0usize;
            for doc in &corpus.documents {
                for sent in &doc.sentences {
                    let tags: Vec<usize> = (0..sent.tokens.len())
                        .map(|t| {
                            if dataset.mask[flat + t] {
                                schema.default_class
                            } else {
                                labels[flat + t]
                            }
                        })
                        .collect();
                    let bio = io_to_bio(&tags, schema);
                    for (tok, tag) in sent.tokens.iter().zip(&bio) {
                        out.push_str(&tok.text);
                        out.push(' ');
                        out.push_str(tag);
                        out.push('\n');
                    }
                    out.push('\n');
                    flat += sent.tokens.len();
                }
            }
            Ok(out)
        }
    }
}
