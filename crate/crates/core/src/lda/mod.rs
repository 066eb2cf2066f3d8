//! Latent Dirichlet allocation by collapsed Gibbs sampling.
//!
//! The sampler integrates out the topic-word and document-topic distributions
//! and resamples one token's topic at a time from
//!
//! ```text
//! p(z = k | rest) ∝ (n_dk + α_k) · (n_kw + β) / (n_k + V·β)
//! ```
//!
//! with the token itself removed from every count. Sweeps visit documents in
//! order and tokens in position order, so a run is a pure function of the
//! corpus, the hyperparameters and the seed.

mod counts;
mod generate;
mod io;

use std::collections::BTreeMap;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::corpus::{TokenizedDocument, Vocabulary};
use crate::error::{Error, Result};
use crate::rng::{self, categorical, SamplerRng};

pub use counts::{CountLayout, TopicWordCounts, SPARSE_THRESHOLD};
pub use generate::{generate_corpus, SyntheticCorpus};
pub use io::{ModelFile, MODEL_FORMAT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperparams {
    /// Number of topics.
    pub k: usize,
    /// Total document-topic concentration; each topic gets `alpha_sum / k`.
    pub alpha_sum: f64,
    /// Per-word topic-word concentration.
    pub beta: f64,
    /// Gibbs sweeps.
    pub iterations: usize,
    pub seed: u64,
    /// Number of final-chain samples whose counts are averaged into the
    /// estimates. 1 means the last state only.
    #[serde(default = "one")]
    pub samples: usize,
    /// Sweeps between averaged samples.
    #[serde(default = "ten")]
    pub thinning: usize,
}

fn one() -> usize {
    1
}

fn ten() -> usize {
    10
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            k: 20,
            alpha_sum: 5.0,
            beta: 0.01,
            iterations: 1000,
            seed: 0,
            samples: 1,
            thinning: 10,
        }
    }
}

impl Hyperparams {
    pub fn alpha(&self) -> f64 {
        self.alpha_sum / self.k as f64
    }

    pub fn with_k(self, k: usize) -> Self {
        Self { k, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.k < 1 {
            return bad("K must be >= 1".into());
        }
        if !(self.alpha_sum > 0.0 && self.alpha_sum.is_finite()) {
            return bad(format!("alpha_sum must be positive, got {}", self.alpha_sum));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        if self.iterations < 1 {
            return bad("iterations must be >= 1".into());
        }
        if self.samples < 1 || self.thinning < 1 {
            return bad("samples and thinning must be >= 1".into());
        }
        if (self.samples - 1).saturating_mul(self.thinning) >= self.iterations {
            return bad(format!(
                "{} samples every {} sweeps do not fit in {} iterations",
                self.samples, self.thinning, self.iterations
            ));
        }
        Ok(())
    }
}

/// Mutable sampler state: topic assignments and the three count tables they
/// induce.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsState {
    topics: usize,
    vocab_size: usize,
    words: Vec<u32>,
    offsets: Vec<usize>,
    z: Vec<u32>,
    n_dk: Vec<u32>,
    n_kw: TopicWordCounts,
    n_k: Vec<u32>,
}

impl AsRef<[u32]> for TokenizedDocument {
    fn as_ref(&self) -> &[u32] {
        &self.tokens
    }
}

/// Assigns every token a uniformly random topic.
pub fn init_state<D: AsRef<[u32]>, R: RngCore + ?Sized>(
    docs: &[D],
    vocab_size: usize,
    hyper: &Hyperparams,
    rng: &mut R,
) -> Result<GibbsState> {
    GibbsState::init(docs, vocab_size, hyper, CountLayout::Auto, rng)
}

impl GibbsState {
    pub fn init<D: AsRef<[u32]>, R: RngCore + ?Sized>(
        docs: &[D],
        vocab_size: usize,
        hyper: &Hyperparams,
        layout: CountLayout,
        rng: &mut R,
    ) -> Result<Self> {
        if hyper.k < 1 {
            return Err(Error::InvalidParameter("K must be >= 1".into()));
        }
        let k = hyper.k;
        Self::build(docs, vocab_size, k, layout, |_, _| rng::below(rng, k) as u32)
    }

    /// Builds a state from explicit assignments, one slice per document.
    pub fn from_assignments<D: AsRef<[u32]>>(
        docs: &[D],
        vocab_size: usize,
        topics: usize,
        z: &[Vec<u32>],
    ) -> Result<Self> {
        if z.len() != docs.len() {
            return Err(Error::InvalidParameter("one assignment vector per document".into()));
        }
        for (d, zd) in docs.iter().zip(z) {
            if d.as_ref().len() != zd.len() || zd.iter().any(|&t| t as usize >= topics) {
                return Err(Error::InvalidParameter("assignment shape or topic out of range".into()));
            }
        }
        Self::build(docs, vocab_size, topics, CountLayout::Auto, |d, i| z[d][i])
    }

    fn build<D: AsRef<[u32]>>(
        docs: &[D],
        vocab_size: usize,
        topics: usize,
        layout: CountLayout,
        mut assign: impl FnMut(usize, usize) -> u32,
    ) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if topics < 1 {
            return Err(Error::InvalidParameter("K must be >= 1".into()));
        }
        let total: usize = docs.iter().map(|d| d.as_ref().len()).sum();
        let mut words = Vec::with_capacity(total);
        let mut offsets = Vec::with_capacity(docs.len() + 1);
        offsets.push(0);
        for d in docs {
            for &w in d.as_ref() {
                if w as usize >= vocab_size {
                    return Err(Error::InvalidParameter(format!(
                        "token id {w} outside vocabulary of size {vocab_size}"
                    )));
                }
                words.push(w);
            }
            offsets.push(words.len());
        }

        let mut state = GibbsState {
            topics,
            vocab_size,
            words,
            offsets,
            z: Vec::with_capacity(total),
            n_dk: vec![0; docs.len() * topics],
            n_kw: TopicWordCounts::new(topics, vocab_size, layout),
            n_k: vec![0; topics],
        };
        for d in 0..docs.len() {
            for i in 0..state.doc_len(d) {
                let t = assign(d, i);
                state.z.push(t);
                let w = state.words[state.offsets[d] + i] as usize;
                state.add(d, w, t as usize);
            }
        }
        Ok(state)
    }

    #[inline]
    fn add(&mut self, d: usize, w: usize, t: usize) {
        self.n_dk[d * self.topics + t] += 1;
        self.n_kw.increment(t, w);
        self.n_k[t] += 1;
    }

    #[inline]
    fn remove(&mut self, d: usize, w: usize, t: usize) {
        self.n_dk[d * self.topics + t] -= 1;
        self.n_kw.decrement(t, w);
        self.n_k[t] -= 1;
    }

    pub fn topics(&self) -> usize {
        self.topics
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn num_docs(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn num_tokens(&self) -> usize {
        self.words.len()
    }

    pub fn doc_len(&self, d: usize) -> usize {
        self.offsets[d + 1] - self.offsets[d]
    }

    pub fn doc_words(&self, d: usize) -> &[u32] {
        &self.words[self.offsets[d]..self.offsets[d + 1]]
    }

    pub fn assignments(&self, d: usize) -> &[u32] {
        &self.z[self.offsets[d]..self.offsets[d + 1]]
    }

    /// All assignments, documents concatenated.
    pub fn all_assignments(&self) -> &[u32] {
        &self.z
    }

    pub fn doc_topic(&self, d: usize, k: usize) -> u32 {
        self.n_dk[d * self.topics + k]
    }

    pub fn topic_word(&self, k: usize, w: usize) -> u32 {
        self.n_kw.get(k, w)
    }

    pub fn topic_total(&self, k: usize) -> u32 {
        self.n_k[k]
    }

    pub fn topic_word_counts(&self) -> &TopicWordCounts {
        &self.n_kw
    }

    /// Full conditional of token `i` of document `d`, normalized.
    pub fn conditional(&self, hyper: &Hyperparams, d: usize, i: usize) -> Vec<f64> {
        let pos = self.offsets[d] + i;
        let w = self.words[pos] as usize;
        let current = self.z[pos] as usize;
        let k = self.topics;
        let mut n_dk: Vec<u32> = self.n_dk[d * k..(d + 1) * k].to_vec();
        let mut n_k = self.n_k.clone();
        let mut n_kw: Vec<u32> = (0..k).map(|t| self.n_kw.get(t, w)).collect();
        n_dk[current] -= 1;
        n_k[current] -= 1;
        n_kw[current] -= 1;
        let mut p = vec![0.0; k];
        collapsed_conditional(
            &n_dk,
            &n_kw,
            &n_k,
            hyper.alpha(),
            hyper.beta,
            self.vocab_size as f64 * hyper.beta,
            &mut p,
        );
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= total);
        p
    }

    /// Resamples every token once, documents in order, positions in order.
    pub fn sweep<R: RngCore + ?Sized>(&mut self, hyper: &Hyperparams, rng: &mut R) {
        let k = self.topics;
        let alpha = hyper.alpha();
        let beta = hyper.beta;
        let vbeta = self.vocab_size as f64 * beta;
        let mut col = vec![0.0; k];
        let mut weights = vec![0.0; k];
        for d in 0..self.num_docs() {
            for pos in self.offsets[d]..self.offsets[d + 1] {
                let w = self.words[pos] as usize;
                let old = self.z[pos] as usize;
                self.remove(d, w, old);

                self.n_kw.smoothed_column(w, beta, &mut col);
                let doc = &self.n_dk[d * k..(d + 1) * k];
                let mut total = 0.0;
                for t in 0..k {
                    let p = (doc[t] as f64 + alpha) * col[t] / (self.n_k[t] as f64 + vbeta);
                    weights[t] = p;
                    total += p;
                }
                let new = categorical(rng, &weights, total);

                self.z[pos] = new as u32;
                self.add(d, w, new);
            }
        }
    }
}

/// Unnormalized collapsed conditional from counts that already exclude the
/// token being resampled.
pub fn collapsed_conditional(
    n_dk: &[u32],
    n_kw: &[u32],
    n_k: &[u32],
    alpha: f64,
    beta: f64,
    vbeta: f64,
    out: &mut [f64],
) {
    for t in 0..out.len() {
        out[t] = (n_dk[t] as f64 + alpha) * (n_kw[t] as f64 + beta) / (n_k[t] as f64 + vbeta);
    }
}

pub fn gibbs_sweep<R: RngCore + ?Sized>(state: &mut GibbsState, hyper: &Hyperparams, rng: &mut R) {
    state.sweep(hyper, rng);
}

/// A trained model: point estimates of the topic-word (`phi`, `K x V`) and
/// document-topic (`theta`, `D x K`) distributions, plus the counts they were
/// computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    hyper: Hyperparams,
    vocab_hash: String,
    vocab_size: usize,
    samples: u32,
    topic_word: Vec<Vec<(u32, u64)>>,
    doc_topic: Vec<Vec<u64>>,
    phi: Vec<f64>,
    theta: Vec<f64>,
}

impl TopicModel {
    /// Estimates from counts summed over `samples` chain states.
    pub fn from_counts(
        hyper: Hyperparams,
        vocab_hash: String,
        vocab_size: usize,
        samples: u32,
        topic_word: Vec<Vec<(u32, u64)>>,
        doc_topic: Vec<Vec<u64>>,
    ) -> Result<Self> {
        hyper.validate()?;
        if samples < 1 || topic_word.len() != hyper.k || vocab_size == 0 {
            return Err(Error::InvalidParameter("inconsistent model counts".into()));
        }
        let s = samples as f64;
        let k = hyper.k;
        let vbeta = vocab_size as f64 * hyper.beta;
        let mut phi = vec![0.0; k * vocab_size];
        for (t, row) in topic_word.iter().enumerate() {
            let n_k: u64 = row.iter().map(|&(_, c)| c).sum();
            let denom = n_k as f64 / s + vbeta;
            let out = &mut phi[t * vocab_size..(t + 1) * vocab_size];
            out.fill(hyper.beta / denom);
            for &(w, c) in row {
                let w = w as usize;
                if w >= vocab_size {
                    return Err(Error::InvalidParameter(format!("word id {w} out of range")));
                }
                out[w] = (c as f64 / s + hyper.beta) / denom;
            }
        }
        let alpha = hyper.alpha();
        let mut theta = Vec::with_capacity(doc_topic.len() * k);
        for row in &doc_topic {
            if row.len() != k {
                return Err(Error::InvalidParameter("doc-topic row length differs from K".into()));
            }
            let n_d: u64 = row.iter().sum();
            let denom = n_d as f64 / s + hyper.alpha_sum;
            theta.extend(row.iter().map(|&c| (c as f64 / s + alpha) / denom));
        }
        Ok(Self {
            hyper,
            vocab_hash,
            vocab_size,
            samples,
            topic_word,
            doc_topic,
            phi,
            theta,
        })
    }

    pub fn hyper(&self) -> &Hyperparams {
        &self.hyper
    }

    pub fn topics(&self) -> usize {
        self.hyper.k
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn vocab_hash(&self) -> &str {
        &self.vocab_hash
    }

    pub fn num_docs(&self) -> usize {
        self.doc_topic.len()
    }

    pub fn samples(&self) -> u32 {
        self.samples
    }

    pub fn phi(&self, k: usize) -> &[f64] {
        &self.phi[k * self.vocab_size..(k + 1) * self.vocab_size]
    }

    pub fn phi_at(&self, k: usize, w: usize) -> f64 {
        self.phi[k * self.vocab_size + w]
    }

    pub fn theta(&self, d: usize) -> &[f64] {
        &self.theta[d * self.hyper.k..(d + 1) * self.hyper.k]
    }

    pub fn topic_word_counts(&self) -> &[Vec<(u32, u64)>] {
        &self.topic_word
    }

    pub fn doc_topic_counts(&self) -> &[Vec<u64>] {
        &self.doc_topic
    }
}

struct Accumulator {
    topic_word: Vec<BTreeMap<u32, u64>>,
    doc_topic: Vec<Vec<u64>>,
}

impl Accumulator {
    fn new(state: &GibbsState) -> Self {
        Self {
            topic_word: vec![BTreeMap::new(); state.topics],
            doc_topic: vec![vec![0; state.topics]; state.num_docs()],
        }
    }

    fn add(&mut self, state: &GibbsState) {
        for (t, row) in self.topic_word.iter_mut().enumerate() {
            for (w, c) in state.n_kw.topic_row(t) {
                *row.entry(w).or_default() += c as u64;
            }
        }
        for (d, row) in self.doc_topic.iter_mut().enumerate() {
            for (t, c) in row.iter_mut().enumerate() {
                *c += state.doc_topic(d, t) as u64;
            }
        }
    }

    fn sparse_topic_word(self) -> (Vec<Vec<(u32, u64)>>, Vec<Vec<u64>>) {
        let tw = self
            .topic_word
            .into_iter()
            .map(|row| row.into_iter().collect())
            .collect();
        (tw, self.doc_topic)
    }
}

/// Runs the full chain and estimates the model. The chain is seeded from
/// `hyper.seed`.
pub fn train<D: AsRef<[u32]>>(docs: &[D], vocab: &Vocabulary, hyper: &Hyperparams) -> Result<TopicModel> {
    train_with(docs, vocab.len(), vocab.hash(), hyper, CountLayout::Auto)
}

pub fn train_with<D: AsRef<[u32]>>(
    docs: &[D],
    vocab_size: usize,
    vocab_hash: String,
    hyper: &Hyperparams,
    layout: CountLayout,
) -> Result<TopicModel> {
    hyper.validate()?;
    let mut rng: SamplerRng = rng::seeded(hyper.seed);
    let mut state = GibbsState::init(docs, vocab_size, hyper, layout, &mut rng)?;
    let first_sample = hyper.iterations - (hyper.samples - 1) * hyper.thinning;
    let mut acc = Accumulator::new(&state);
    for sweep in 1..=hyper.iterations {
        state.sweep(hyper, &mut rng);
        if sweep >= first_sample && (sweep - first_sample).is_multiple_of(hyper.thinning) {
            acc.add(&state);
        }
    }
    let (topic_word, doc_topic) = acc.sparse_topic_word();
    TopicModel::from_counts(
        *hyper,
        vocab_hash,
        vocab_size,
        hyper.samples as u32,
        topic_word,
        doc_topic,
    )
}

/// The `n` highest-weight words of topic `k` as `(word id, phi)`, ties broken
/// by ascending word id.
pub fn top_words(model: &TopicModel, k: usize, n: usize) -> Vec<(u32, f64)> {
    rank_row(model.phi(k), n)
}

pub(crate) fn rank_row(row: &[f64], n: usize) -> Vec<(u32, f64)> {
    let mut ids: Vec<u32> = (0..row.len() as u32).collect();
    let by_weight = |a: &u32, b: &u32| {
        row[*b as usize]
            .total_cmp(&row[*a as usize])
            .then_with(|| a.cmp(b))
    };
    let n = n.min(row.len());
    if n < ids.len() && n > 0 {
        ids.select_nth_unstable_by(n - 1, by_weight);
        ids.truncate(n);
    }
    ids.sort_unstable_by(by_weight);
    ids.truncate(n);
    ids.into_iter().map(|w| (w, row[w as usize])).collect()
}
