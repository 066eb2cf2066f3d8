//! Choosing the number of topics by held-out likelihood.
//!
//! Documents are split once into train and test partitions. For every K in
//! the grid a model is trained on the train partition and scored on the test
//! partition with the left-to-right particle estimator; the K with the highest
//! per-token log-likelihood wins (ties go to the smaller K).

use std::io::Write;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{build_vocabulary, to_words, TokenizedDocument, Vocabulary};
use crate::error::{Error, Result};
use crate::lda::{self, Hyperparams, TopicModel};
use crate::rng::{self, categorical, derive_seed, sha256_hex};

pub const CURVE_HEADER: [&str; 5] = ["k", "heldout_ll", "per_token_ll", "test_tokens", "oov_dropped"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Number of particles.
    pub particles: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            particles: 20,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub k: usize,
    /// Total log-likelihood of the test tokens, in nats.
    pub heldout_ll: f64,
    pub per_token_ll: f64,
    pub test_tokens: usize,
    pub oov_dropped: usize,
    /// Hash of the test partition's document ids.
    pub partition_hash: String,
}

/// Seeded shuffle, then the first `round(train_fraction * D)` documents train.
/// Both sides are kept non-empty.
pub fn split_corpus<T: Clone>(docs: &[T], spec: &SplitSpec) -> Result<(Vec<T>, Vec<T>)> {
    if docs.len() < 2 {
        return Err(Error::TooFewDocuments(docs.len()));
    }
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train_fraction must be in (0, 1), got {}",
            spec.train_fraction
        )));
    }
    let n = docs.len();
    let mut order: Vec<usize> = (0..n).collect();
    rng::shuffle(&mut rng::seeded(spec.seed), &mut order);
    let n_train = ((spec.train_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let train = order[..n_train].iter().map(|&i| docs[i].clone()).collect();
    let test = order[n_train..].iter().map(|&i| docs[i].clone()).collect();
    Ok((train, test))
}

/// Test documents expressed in a model's vocabulary. `None` marks a token the
/// model never saw.
#[derive(Debug, Clone, PartialEq)]
pub struct HeldOutSet {
    pub vocab_hash: String,
    pub docs: Vec<HeldOutDocument>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeldOutDocument {
    pub id: String,
    pub tokens: Vec<Option<u32>>,
}

impl HeldOutSet {
    /// Maps documents from `doc_vocab` ids into `model_vocab` ids.
    pub fn project(docs: &[TokenizedDocument], doc_vocab: &Vocabulary, model_vocab: &Vocabulary) -> Self {
        let docs = docs
            .iter()
            .map(|d| HeldOutDocument {
                id: d.id.clone(),
                tokens: d
                    .tokens
                    .iter()
                    .map(|&t| doc_vocab.word(t).and_then(|w| model_vocab.id(w)))
                    .collect(),
            })
            .collect();
        Self {
            vocab_hash: model_vocab.hash(),
            docs,
        }
    }

    /// Documents already in the model's id space; ids `>= vocab.len()` are OOV.
    pub fn from_docs(docs: &[TokenizedDocument], vocab: &Vocabulary) -> Self {
        let v = vocab.len() as u32;
        Self {
            vocab_hash: vocab.hash(),
            docs: docs
                .iter()
                .map(|d| HeldOutDocument {
                    id: d.id.clone(),
                    tokens: d.tokens.iter().map(|&t| (t < v).then_some(t)).collect(),
                })
                .collect(),
        }
    }

    pub fn partition_hash(&self) -> String {
        let mut ids: Vec<u8> = Vec::new();
        for d in &self.docs {
            ids.extend_from_slice(d.id.as_bytes());
            ids.push(b'\n');
        }
        sha256_hex(&ids)
    }
}

/// Held-out log-likelihood by the left-to-right particle algorithm.
///
/// For each test document, `R` particles each hold topic assignments for the
/// tokens seen so far. At position `n` every particle first resamples each
/// earlier assignment given the others, then contributes
/// `sum_k p(z_n = k | z_<n) * phi[k][w_n]`; the particle average is the
/// predictive probability of token `n`, and the document log-likelihood is the
/// sum of the logs. Each document draws from its own seeded stream, so the
/// result does not depend on how documents are scheduled.
pub fn heldout_loglik(model: &TopicModel, heldout: &HeldOutSet, config: &EvalConfig) -> Result<EvalResult> {
    if config.particles < 1 {
        return Err(Error::InvalidParameter("particles must be >= 1".into()));
    }
    if heldout.vocab_hash != model.vocab_hash() {
        return Err(Error::VocabularyMismatch {
            expected: model.vocab_hash().to_string(),
            found: heldout.vocab_hash.clone(),
        });
    }
    if heldout.docs.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let v = model.vocab_size() as u32;
    let per_doc: Vec<(f64, usize, usize)> = heldout
        .docs
        .par_iter()
        .enumerate()
        .map(|(i, d)| {
            let words: Vec<u32> = d.tokens.iter().filter_map(|t| t.filter(|&w| w < v)).collect();
            let oov = d.tokens.len() - words.len();
            let mut r = rng::seeded(derive_seed(config.seed, &format!("doc:{i}")));
            let ll = if words.is_empty() {
                0.0
            } else {
                left_to_right(model, &words, config.particles, &mut r)
            };
            (ll, words.len(), oov)
        })
        .collect();

    let mut heldout_ll = 0.0;
    let mut test_tokens = 0;
    let mut oov_dropped = 0;
    for (ll, n, oov) in per_doc {
        heldout_ll += ll;
        test_tokens += n;
        oov_dropped += oov;
    }
    if test_tokens == 0 {
        return Err(Error::EmptyTestSet);
    }
    Ok(EvalResult {
        k: model.topics(),
        heldout_ll,
        per_token_ll: heldout_ll / test_tokens as f64,
        test_tokens,
        oov_dropped,
        partition_hash: heldout.partition_hash(),
    })
}

/// Log-likelihood of one document's in-vocabulary words.
pub fn left_to_right<R: RngCore + ?Sized>(model: &TopicModel, words: &[u32], particles: usize, rng: &mut R) -> f64 {
    let k = model.topics();
    let alpha = model.hyper().alpha();
    let alpha_sum = model.hyper().alpha_sum;
    let n = words.len();

    // phi[., w_i] gathered per position
    let mut phi_cols = vec![0.0; n * k];
    for (i, &w) in words.iter().enumerate() {
        for t in 0..k {
            phi_cols[i * k + t] = model.phi_at(t, w as usize);
        }
    }
    let mut z = vec![vec![0usize; n]; particles];
    let mut counts = vec![vec![0u32; k]; particles];
    let mut weights = vec![0.0; k];
    let mut ll = 0.0;
    for pos in 0..n {
        let col = &phi_cols[pos * k..(pos + 1) * k];
        let mut p_pos = 0.0;
        for r in 0..particles {
            let zr = &mut z[r];
            let cr = &mut counts[r];
            for prev in 0..pos {
                let old = zr[prev];
                cr[old] -= 1;
                let prev_col = &phi_cols[prev * k..(prev + 1) * k];
                let mut total = 0.0;
                for t in 0..k {
                    let p = (cr[t] as f64 + alpha) * prev_col[t];
                    weights[t] = p;
                    total += p;
                }
                let new = categorical(rng, &weights, total);
                zr[prev] = new;
                cr[new] += 1;
            }

            let mut total = 0.0;
            for t in 0..k {
                let p = (cr[t] as f64 + alpha) * col[t];
                weights[t] = p;
                total += p;
            }
            p_pos += total / (pos as f64 + alpha_sum);

            let new = categorical(rng, &weights, total);
            zr[pos] = new;
            cr[new] += 1;
        }
        ll += (p_pos / particles as f64).ln();
    }
    ll
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub best_k: usize,
    pub curve: Vec<EvalResult>,
    pub partition_hash: String,
    pub train_docs: usize,
    pub test_docs: usize,
}

/// Split once, then train and evaluate every K in `k_grid`.
///
/// The model vocabulary is rebuilt from the train partition alone, so test
/// words never seen in training are out-of-vocabulary.
pub fn select_k(
    docs: &[TokenizedDocument],
    vocab: &Vocabulary,
    k_grid: &[usize],
    hyper_template: &Hyperparams,
    split: &SplitSpec,
    eval: &EvalConfig,
) -> Result<Selection> {
    validate_grid(k_grid)?;
    let (train_docs, test_docs) = split_corpus(docs, split)?;
    let train_build = build_vocabulary(&to_words(&train_docs, vocab), 1)?;
    let train_vocab = train_build.vocabulary;
    let heldout = HeldOutSet::project(&test_docs, vocab, &train_vocab);

    let curve: Vec<EvalResult> = k_grid
        .par_iter()
        .map(|&k| {
            let hyper = hyper_template.with_k(k);
            lda::train(&train_build.documents, &train_vocab, &hyper)
                .and_then(|m| heldout_loglik(&m, &heldout, eval))
                .map_err(|e| Error::AtTopicCount {
                    k,
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;

    Ok(Selection {
        best_k: best_k(&curve),
        partition_hash: heldout.partition_hash(),
        curve,
        train_docs: train_docs.len(),
        test_docs: test_docs.len(),
    })
}

pub fn validate_grid(k_grid: &[usize]) -> Result<()> {
    if k_grid.is_empty() {
        return Err(Error::InvalidParameter("K grid is empty".into()));
    }
    if k_grid.contains(&0) {
        return Err(Error::InvalidParameter("K values must be >= 1".into()));
    }
    if k_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("K grid must be strictly ascending".into()));
    }
    Ok(())
}

/// Argmax of per-token log-likelihood; the first (smallest) K wins ties.
pub fn best_k(curve: &[EvalResult]) -> usize {
    let mut best = &curve[0];
    for r in &curve[1..] {
        if r.per_token_ll > best.per_token_ll || (r.per_token_ll == best.per_token_ll && r.k < best.k) {
            best = r;
        }
    }
    best.k
}

pub fn write_curve_csv<W: Write>(curve: &[EvalResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let wrap = |e: csv::Error| Error::Config(format!("writing curve CSV: {e}"));
    w.write_record(CURVE_HEADER).map_err(wrap)?;
    for r in curve {
        w.write_record([
            r.k.to_string(),
            r.heldout_ll.to_string(),
            r.per_token_ll.to_string(),
            r.test_tokens.to_string(),
            r.oov_dropped.to_string(),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io("<curve csv>", e))?;
    Ok(())
}
