//! Independent oracles shared by the integration and acceptance tests. Nothing
//! here calls into the code under test except to build inputs.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use ddeo_core::corpus::{TokenizedDocument, Vocabulary};
use ddeo_core::lda::{Hyperparams, TopicModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use statrs::function::gamma::ln_gamma;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Every assignment of `n` tokens to `k` topics, in lexicographic order.
pub fn all_assignments(n: usize, k: usize) -> Vec<Vec<u32>> {
    let total = k.pow(n as u32);
    (0..total)
        .map(|mut code| {
            let mut z = vec![0u32; n];
            for slot in z.iter_mut().rev() {
                *slot = (code % k) as u32;
                code /= k;
            }
            z
        })
        .collect()
}

/// Unnormalized log joint p(w, z) of collapsed LDA with symmetric priors.
pub fn log_joint(docs: &[Vec<u32>], z: &[u32], k: usize, v: usize, alpha: f64, beta: f64) -> f64 {
    let mut n_dk = vec![vec![0u32; k]; docs.len()];
    let mut n_kw = vec![vec![0u32; v]; k];
    let mut pos = 0;
    for (d, doc) in docs.iter().enumerate() {
        for &w in doc {
            let t = z[pos] as usize;
            n_dk[d][t] += 1;
            n_kw[t][w as usize] += 1;
            pos += 1;
        }
    }
    let mut lp = 0.0;
    for row in &n_dk {
        let n: u32 = row.iter().sum();
        lp += ln_gamma(k as f64 * alpha) - ln_gamma(n as f64 + k as f64 * alpha);
        for &c in row {
            lp += ln_gamma(c as f64 + alpha) - ln_gamma(alpha);
        }
    }
    for row in &n_kw {
        let n: u32 = row.iter().sum();
        lp += ln_gamma(v as f64 * beta) - ln_gamma(n as f64 + v as f64 * beta);
        for &c in row {
            lp += ln_gamma(c as f64 + beta) - ln_gamma(beta);
        }
    }
    lp
}

/// Exact posterior over all `k^N` assignments, keyed by the flat assignment.
pub fn exact_posterior(docs: &[Vec<u32>], k: usize, v: usize, alpha: f64, beta: f64) -> HashMap<Vec<u32>, f64> {
    let n: usize = docs.iter().map(Vec::len).sum();
    let states = all_assignments(n, k);
    let logs: Vec<f64> = states.iter().map(|z| log_joint(docs, z, k, v, alpha, beta)).collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = logs.iter().map(|l| (l - max).exp()).sum();
    states
        .into_iter()
        .zip(logs)
        .map(|(z, l)| (z, (l - max).exp() / total))
        .collect()
}

pub fn total_variation(p: &HashMap<Vec<u32>, f64>, q: &HashMap<Vec<u32>, f64>) -> f64 {
    let keys: BTreeSet<&Vec<u32>> = p.keys().chain(q.keys()).collect();
    0.5 * keys
        .into_iter()
        .map(|key| (p.get(key).unwrap_or(&0.0) - q.get(key).unwrap_or(&0.0)).abs())
        .sum::<f64>()
}

/// Exact log p(words | phi, alpha) for one document, summing over every topic
/// sequence with the Dirichlet-multinomial prior on topic counts.
pub fn exact_doc_loglik(phi: &[Vec<f64>], words: &[u32], alpha: f64) -> f64 {
    let k = phi.len();
    let n = words.len();
    let alpha_sum = alpha * k as f64;
    let norm = ln_gamma(alpha_sum) - ln_gamma(n as f64 + alpha_sum);
    let mut total = 0.0;
    for z in all_assignments(n, k) {
        let mut counts = vec![0u32; k];
        let mut lik = 1.0;
        for (&t, &w) in z.iter().zip(words) {
            counts[t as usize] += 1;
            lik *= phi[t as usize][w as usize];
        }
        let prior: f64 = counts
            .iter()
            .map(|&c| ln_gamma(c as f64 + alpha) - ln_gamma(alpha))
            .sum::<f64>()
            + norm;
        total += prior.exp() * lik;
    }
    total.ln()
}

/// A model whose phi is exactly `(c + beta) / (n_k + V beta)` for the given
/// integer counts, with phi read back for the oracle.
pub fn model_from_counts(counts: &[Vec<u64>], alpha_sum: f64, beta: f64) -> (TopicModel, Vec<Vec<f64>>) {
    let k = counts.len();
    let v = counts[0].len();
    let hyper = Hyperparams {
        k,
        alpha_sum,
        beta,
        iterations: 1,
        seed: 0,
        samples: 1,
        thinning: 1,
    };
    let topic_word = counts
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(w, &c)| (w as u32, c))
                .collect()
        })
        .collect();
    let model = TopicModel::from_counts(hyper, "test".into(), v, 1, topic_word, Vec::new()).unwrap();
    let phi = counts
        .iter()
        .map(|row| {
            let n: u64 = row.iter().sum();
            row.iter()
                .map(|&c| (c as f64 + beta) / (n as f64 + v as f64 * beta))
                .collect()
        })
        .collect();
    (model, phi)
}

/// Symmetric-Dirichlet topic rows, drawn via normalized Gamma variates.
pub fn dirichlet_rows(rows: usize, cols: usize, concentration: f64, seed: u64) -> Vec<Vec<f64>> {
    let gamma = rand_distr::Gamma::new(concentration, 1.0).unwrap();
    let mut r = rng(seed);
    (0..rows)
        .map(|_| {
            let row: Vec<f64> = (0..cols).map(|_| r.sample(gamma)).collect();
            let s: f64 = row.iter().sum();
            row.into_iter().map(|x| x / s).collect()
        })
        .collect()
}

pub fn synthetic_vocabulary(docs: &[Vec<u32>], v: usize) -> Vocabulary {
    let mut freq = vec![0u64; v];
    for d in docs {
        for &w in d {
            freq[w as usize] += 1;
        }
    }
    Vocabulary::from_parts((0..v).map(|i| format!("w{i:05}")).collect(), freq)
}

pub fn tokenized(docs: &[Vec<u32>]) -> Vec<TokenizedDocument> {
    docs.iter()
        .enumerate()
        .map(|(i, d)| TokenizedDocument {
            id: format!("d{i}"),
            tokens: d.clone(),
            categories: BTreeSet::new(),
        })
        .collect()
}

/// Indices of the `n` largest entries, ties to the lower index.
pub fn top_indices(row: &[f64], n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&a, &b| row[b].partial_cmp(&row[a]).unwrap().then(a.cmp(&b)));
    idx.truncate(n);
    idx
}

/// Greedy one-to-one matching by top-`n` overlap; returns the mean overlap
/// fraction over matched true topics.
pub fn greedy_top_overlap(learned: &[Vec<f64>], truth: &[Vec<f64>], n: usize) -> f64 {
    let lt: Vec<BTreeSet<usize>> = learned.iter().map(|r| top_indices(r, n).into_iter().collect()).collect();
    let tt: Vec<BTreeSet<usize>> = truth.iter().map(|r| top_indices(r, n).into_iter().collect()).collect();
    let mut pairs: Vec<(usize, usize, usize)> = Vec::new();
    for (i, a) in lt.iter().enumerate() {
        for (j, b) in tt.iter().enumerate() {
            pairs.push((a.intersection(b).count(), i, j));
        }
    }
    pairs.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let (mut used_l, mut used_t) = (BTreeSet::new(), BTreeSet::new());
    let mut sum = 0usize;
    for (overlap, i, j) in pairs {
        if used_l.contains(&i) || used_t.contains(&j) {
            continue;
        }
        used_l.insert(i);
        used_t.insert(j);
        sum += overlap;
    }
    sum as f64 / (truth.len() * n) as f64
}

/// Whether any lexicon term (`stem*` or literal) matches `tok`.
pub fn lexicon_hit(terms: &[String], tok: &str) -> bool {
    terms.iter().any(|term| match term.strip_suffix('*') {
        Some(stem) if !stem.is_empty() => tok.starts_with(stem),
        _ => term == tok,
    })
}

/// Naive polarity: scan every lexicon term for every token.
pub fn brute_force_negative(tokens: &[String], positive: &[String], negative: &[String]) -> bool {
    let mut pos = 0;
    let mut neg = 0;
    for t in tokens {
        if lexicon_hit(negative, t) {
            neg += 1;
        } else if lexicon_hit(positive, t) {
            pos += 1;
        }
    }
    neg >= 1 && neg > pos
}

/// Per-category seed hit counts and the majority label (`None` = unlabeled).
pub fn label_oracle(
    words: &[String],
    seeds: &BTreeMap<String, Vec<String>>,
    contains_stem: bool,
) -> (Option<String>, BTreeMap<String, usize>) {
    let matches = |term: &str, word: &str| {
        let word = word.strip_prefix('#').unwrap_or(word);
        match term.strip_suffix('*') {
            Some(stem) if contains_stem => word.contains(stem),
            Some(stem) => word.starts_with(stem),
            None => word == term,
        }
    };
    let mut hits = BTreeMap::new();
    for (cat, terms) in seeds {
        let c = words.iter().filter(|w| terms.iter().any(|t| matches(t, w))).count();
        hits.insert(cat.clone(), c);
    }
    let winners: Vec<&String> = hits
        .iter()
        .filter(|(_, &c)| c * 2 > words.len())
        .map(|(k, _)| k)
        .collect();
    let label = if winners.len() == 1 { Some(winners[0].clone()) } else { None };
    (label, hits)
}
