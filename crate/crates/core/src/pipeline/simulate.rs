use std::io::Write;
use std::time::Instant;

use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::{ensure_out_dir, load_lexicon, load_queries, out_path, record_timing, write_bytes, PipelineConfig};
use super::{SIMULATED, TRUTH};
use crate::corpus::{QuerySet, RawDocument};
use crate::error::{Error, Result};
use crate::lda::generate_corpus;
use crate::rng::{self, derive_seed};
use crate::sentiment::SentimentLexicon;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedDoc {
    pub id: String,
    /// A negative-lexicon word was planted.
    pub negative: bool,
    /// Category whose query term was planted.
    pub category: String,
    pub planted_words: Vec<String>,
}

/// Ground truth for a simulated corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub words: Vec<String>,
    pub phi: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
    pub docs: Vec<SimulatedDoc>,
}

pub fn synthetic_word(i: usize) -> String {
    format!("w{i:05}")
}

/// Draws `topics` word distributions from a symmetric Dirichlet.
pub fn random_topics(topics: usize, vocab_size: usize, concentration: f64, seed: u64) -> Result<Vec<Vec<f64>>> {
    let gamma = Gamma::new(concentration, 1.0)
        .map_err(|e| Error::InvalidParameter(format!("topic concentration: {e}")))?;
    let mut r = rng::seeded(seed);
    let mut phi = Vec::with_capacity(topics);
    for _ in 0..topics {
        let mut row: Vec<f64> = (0..vocab_size).map(|_| gamma.sample(&mut r)).collect();
        let sum: f64 = row.iter().sum();
        if sum > 0.0 {
            row.iter_mut().for_each(|x| *x /= sum);
        } else {
            row[crate::rng::below(&mut r, vocab_size)] = 1.0;
        }
        // renormalize once more so the row sums to 1 within rounding
        let sum: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= sum);
        phi.push(row);
    }
    Ok(phi)
}

/// Generates documents from the LDA process, then plants in each one the
/// first query term of the category tied to its dominant topic, and in a
/// `negative_fraction` share of them one negative-lexicon word.
pub fn simulate(
    config: &PipelineConfig,
    lexicon: &SentimentLexicon,
    queries: &QuerySet,
) -> Result<(Vec<RawDocument>, Truth)> {
    config.validate_simulate()?;
    let s = &config.simulate;
    let seed = config.stage_seed("simulate");
    let phi = random_topics(s.topics, s.vocab_size, s.topic_beta, derive_seed(seed, "phi"))?;
    let alpha = vec![s.doc_alpha_sum / s.topics as f64; s.topics];
    let synthetic = generate_corpus(&phi, &alpha, s.docs, s.mean_len, derive_seed(seed, "docs"))?;

    let categories: Vec<&str> = queries.categories().collect();
    let negatives = lexicon.negative().literals();
    if negatives.is_empty() {
        return Err(Error::Config("simulate needs at least one literal negative term".into()));
    }
    let mut plant = rng::seeded(derive_seed(seed, "plant"));
    let words: Vec<String> = (0..s.vocab_size).map(synthetic_word).collect();

    let mut raw = Vec::with_capacity(s.docs);
    let mut docs = Vec::with_capacity(s.docs);
    for (i, (tokens, theta)) in synthetic.docs.iter().zip(&synthetic.theta).enumerate() {
        let dominant = theta
            .iter()
            .enumerate()
            .fold(0, |best, (t, &p)| if p > theta[best] { t } else { best });
        let category = categories[dominant % categories.len()];
        let query_term = &queries.terms(category).expect("category exists")[0];
        let negative = rng::uniform(&mut plant) < s.negative_fraction;

        let mut text: Vec<String> = tokens.iter().map(|&w| words[w as usize].clone()).collect();
        let mut planted = vec![query_term.clone()];
        text.insert(rng::below(&mut plant, text.len() + 1), query_term.clone());
        if negative {
            let word = negatives[rng::below(&mut plant, negatives.len())].to_string();
            text.insert(rng::below(&mut plant, text.len() + 1), word.clone());
            planted.push(word);
        }
        let id = format!("sim{i:07}");
        raw.push(RawDocument {
            id: id.clone(),
            text: text.join(" "),
            lang: Some("en".into()),
            created_at: None,
        });
        docs.push(SimulatedDoc {
            id,
            negative,
            category: category.to_string(),
            planted_words: planted,
        });
    }
    Ok((
        raw,
        Truth {
            words,
            phi,
            theta: synthetic.theta,
            docs,
        },
    ))
}

pub fn run_simulate(config: &PipelineConfig) -> Result<Truth> {
    let started = Instant::now();
    config.validate()?;
    let lexicon = load_lexicon(config)?;
    let queries = load_queries(config)?;
    let (raw, truth) = simulate(config, &lexicon, &queries)?;
    ensure_out_dir(config)?;
    let mut buf = Vec::new();
    for d in &raw {
        serde_json::to_writer(&mut buf, d).expect("record serializes");
        buf.write_all(b"\n").expect("in-memory write");
    }
    write_bytes(&out_path(config, SIMULATED), &buf)?;
    let mut text = serde_json::to_string(&truth).expect("truth serializes");
    text.push('\n');
    write_bytes(&out_path(config, TRUTH), text.as_bytes())?;
    record_timing(config, "simulate", started)?;
    Ok(truth)
}
