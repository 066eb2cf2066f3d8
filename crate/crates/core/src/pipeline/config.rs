use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::TokenizerRules;
use crate::error::{Error, Result};
use crate::lda::Hyperparams;
use crate::model_selection::validate_grid;
use crate::rng::derive_seed;

/// Input files. `None` selects the built-in default for that file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub input: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub positive_lexicon: Option<PathBuf>,
    pub negative_lexicon: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub seeds: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaConfig {
    pub alpha_sum: f64,
    pub beta: f64,
    pub iterations: usize,
    pub samples: usize,
    pub thinning: usize,
    /// Fixed K for `train`; when unset, the K chosen by `select-k` is used.
    pub k: Option<usize>,
    pub k_grid: Vec<usize>,
}

impl Default for LdaConfig {
    fn default() -> Self {
        let h = Hyperparams::default();
        Self {
            alpha_sum: h.alpha_sum,
            beta: h.beta,
            iterations: h.iterations,
            samples: h.samples,
            thinning: h.thinning,
            k: None,
            k_grid: vec![5, 10, 20, 50, 100],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub train_fraction: f64,
    pub particles: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            particles: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelingConfig {
    pub top_n: usize,
    pub tau: f64,
    pub contains_stem: bool,
}

impl Default for LabelingConfig {
    fn default() -> Self {
        Self {
            top_n: 20,
            tau: 0.5,
            contains_stem: true,
        }
    }
}

/// Synthetic corpus generator settings for `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub docs: usize,
    pub mean_len: f64,
    pub topics: usize,
    pub vocab_size: usize,
    /// Concentration of each true topic's word distribution.
    pub topic_beta: f64,
    /// Total concentration of each document's topic proportions.
    pub doc_alpha_sum: f64,
    /// Fraction of documents that receive negative-lexicon words.
    pub negative_fraction: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            docs: 2000,
            mean_len: 10.0,
            topics: 8,
            vocab_size: 400,
            topic_beta: 0.05,
            doc_alpha_sum: 1.0,
            negative_fraction: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Worker threads; 0 lets the thread pool decide.
    pub workers: usize,
    /// Keep records whose `lang` matches; records without `lang` are kept.
    pub lang: Option<String>,
    pub min_count: u64,
    pub paths: Paths,
    pub tokenizer: TokenizerRules,
    pub lda: LdaConfig,
    pub selection: SelectionConfig,
    pub labeling: LabelingConfig,
    pub simulate: SimulateConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("out"),
            seed: 1,
            workers: 0,
            lang: Some("en".into()),
            min_count: 5,
            paths: Paths::default(),
            tokenizer: TokenizerRules::default(),
            lda: LdaConfig::default(),
            selection: SelectionConfig::default(),
            labeling: LabelingConfig::default(),
            simulate: SimulateConfig::default(),
        }
    }
}

/// Stage labels fed to [`derive_seed`] with the global seed.
pub const SEED_LABELS: [&str; 4] = ["split", "eval", "lda", "simulate"];

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn stage_seed(&self, label: &str) -> u64 {
        derive_seed(self.seed, label)
    }

    pub fn hyper_template(&self) -> Hyperparams {
        Hyperparams {
            k: self.lda.k.unwrap_or(1),
            alpha_sum: self.lda.alpha_sum,
            beta: self.lda.beta,
            iterations: self.lda.iterations,
            seed: self.stage_seed("lda"),
            samples: self.lda.samples,
            thinning: self.lda.thinning,
        }
    }

    /// Checks parameters and that every configured file exists.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.tokenizer.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.min_count == 0 {
            return bad("min_count must be >= 1".into());
        }
        validate_grid(&self.lda.k_grid).map_err(|e| Error::Config(e.to_string()))?;
        if self.lda.k == Some(0) {
            return bad("k must be >= 1".into());
        }
        self.hyper_template()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        let f = self.selection.train_fraction;
        if !(f > 0.0 && f < 1.0) {
            return bad(format!("train_fraction must be in (0, 1), got {f}"));
        }
        if self.selection.particles == 0 {
            return bad("particles must be >= 1".into());
        }
        if self.labeling.top_n == 0 {
            return bad("top_n must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.labeling.tau) {
            return bad(format!("tau must be in [0, 1], got {}", self.labeling.tau));
        }
        let p = &self.paths;
        for (name, path) in [
            ("input", &p.input),
            ("stopwords", &p.stopwords),
            ("positive_lexicon", &p.positive_lexicon),
            ("negative_lexicon", &p.negative_lexicon),
            ("queries", &p.queries),
            ("seeds", &p.seeds),
        ] {
            if let Some(path) = path {
                if !path.is_file() {
                    return bad(format!("{name} file {} does not exist", path.display()));
                }
            }
        }
        if p.positive_lexicon.is_some() != p.negative_lexicon.is_some() {
            return bad("positive_lexicon and negative_lexicon must be given together".into());
        }
        Ok(())
    }

    pub fn validate_simulate(&self) -> Result<()> {
        let s = &self.simulate;
        let bad = |m: &str| Err(Error::Config(format!("simulate: {m}")));
        if s.docs == 0 || s.topics == 0 || s.vocab_size == 0 {
            return bad("docs, topics and vocab_size must be >= 1");
        }
        if [s.mean_len, s.topic_beta, s.doc_alpha_sum].iter().any(|&v| v.is_nan() || v <= 0.0) {
            return bad("mean_len, topic_beta and doc_alpha_sum must be positive");
        }
        if !(0.0..=1.0).contains(&s.negative_fraction) {
            return bad("negative_fraction must be in [0, 1]");
        }
        Ok(())
    }
}
