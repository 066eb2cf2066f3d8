use rand_distr::{Distribution, Gamma, Poisson};

use crate::error::{Error, Result};
use crate::rng::{self, SamplerRng};

/// Documents drawn from the LDA generative process, with the draws that
/// produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub docs: Vec<Vec<u32>>,
    /// Per-document topic proportions actually drawn.
    pub theta: Vec<Vec<f64>>,
    /// Per-token topic that emitted the word.
    pub topics: Vec<Vec<u32>>,
}

/// Samples `doc_count` documents: `theta ~ Dirichlet(alpha)`, length
/// `~ Poisson(mean_len)` conditioned on being at least 1, and for each token a
/// topic from `theta` and a word from that topic's row of `phi_true`.
pub fn generate_corpus(
    phi_true: &[Vec<f64>],
    alpha: &[f64],
    doc_count: usize,
    mean_len: f64,
    seed: u64,
) -> Result<SyntheticCorpus> {
    let k = phi_true.len();
    if k == 0 {
        return Err(Error::InvalidDistribution("no topics".into()));
    }
    let v = phi_true[0].len();
    let mut cumulative = Vec::with_capacity(k);
    for (t, row) in phi_true.iter().enumerate() {
        if row.len() != v || v == 0 {
            return Err(Error::InvalidDistribution(format!("topic {t} has {} words, expected {v}", row.len())));
        }
        if row.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return Err(Error::InvalidDistribution(format!("topic {t} has a negative or non-finite weight")));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!("topic {t} sums to {sum}")));
        }
        let mut acc = 0.0;
        cumulative.push(
            row.iter()
                .map(|&p| {
                    acc += p;
                    acc
                })
                .collect::<Vec<f64>>(),
        );
    }
    if alpha.len() != k || alpha.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
        return Err(Error::InvalidDistribution(format!(
            "alpha must have {k} positive entries"
        )));
    }
    if !(mean_len > 0.0 && mean_len.is_finite()) {
        return Err(Error::InvalidParameter(format!("mean_len must be positive, got {mean_len}")));
    }

    let gammas: Vec<Gamma<f64>> = alpha
        .iter()
        .map(|&a| Gamma::new(a, 1.0).expect("positive shape"))
        .collect();
    let poisson = Poisson::new(mean_len).expect("positive rate");
    let mut rng: SamplerRng = rng::seeded(seed);

    let mut out = SyntheticCorpus {
        docs: Vec::with_capacity(doc_count),
        theta: Vec::with_capacity(doc_count),
        topics: Vec::with_capacity(doc_count),
    };
    for _ in 0..doc_count {
        let theta = if k == 1 {
            vec![1.0]
        } else {
            let mut g: Vec<f64> = gammas.iter().map(|d| d.sample(&mut rng)).collect();
            let s: f64 = g.iter().sum();
            if s > 0.0 {
                g.iter_mut().for_each(|x| *x /= s);
            } else {
                // every gamma draw underflowed; fall back to the prior mean
                let a: f64 = alpha.iter().sum();
                g = alpha.iter().map(|x| x / a).collect();
            }
            g
        };
        let len = loop {
            let n = poisson.sample(&mut rng) as usize;
            if n >= 1 {
                break n;
            }
        };
        let theta_total: f64 = theta.iter().sum();
        let mut words = Vec::with_capacity(len);
        let mut zs = Vec::with_capacity(len);
        for _ in 0..len {
            let t = rng::categorical(&mut rng, &theta, theta_total);
            let cum = &cumulative[t];
            let u = rng::uniform(&mut rng) * cum[v - 1];
            let w = cum.partition_point(|&c| c <= u).min(v - 1);
            words.push(w as u32);
            zs.push(t as u32);
        }
        out.docs.push(words);
        out.theta.push(theta);
        out.topics.push(zs);
    }
    Ok(out)
}
