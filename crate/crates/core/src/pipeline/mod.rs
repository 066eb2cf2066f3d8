//! Staged pipeline: ingest -> sentiment -> select-k -> train -> report, plus
//! a synthetic-corpus generator.
//!
//! Each stage reads only the configuration and the artifacts of earlier stages
//! from the output directory, and writes its own artifacts there:
//!
//! | stage     | reads                                  | writes                                   |
//! |-----------|----------------------------------------|------------------------------------------|
//! | ingest    | input corpus, stop words, queries      | `tokens.jsonl`, `ingest_stats.json`      |
//! | sentiment | `tokens.jsonl`, lexicons               | `negative_corpus.json`, `sentiment_stats.json` |
//! | select-k  | `negative_corpus.json`                 | `curve.csv`, `selection.json`            |
//! | train     | `negative_corpus.json`, `selection.json` (unless K is fixed) | `model.json`       |
//! | report    | all of the above, seeds                | `topics.json`, `graph.json`, `topic_words.csv`, `manifest.json`, `report.txt` |
//! | simulate  | lexicons, queries                      | `simulated.jsonl`, `truth.json`          |
//!
//! Wall-clock stage timings go to `timings.json`, the only artifact that
//! differs between two runs of the same configuration.

mod config;
mod report;
mod simulate;

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    self, build_vocabulary, clean_all, CleanDocument, QuerySet, StopWordList, TokenizedDocument, TokenizerRules,
    Vocabulary,
};
use crate::error::{Error, Result};
use crate::labeling::SeedLexicon;
use crate::lda::{self, TopicModel};
use crate::model_selection::{self, write_curve_csv, EvalConfig, Selection, SplitSpec};
use crate::sentiment::{self, filter_negative, NegativeStats, SentimentLexicon};

pub use config::{LabelingConfig, LdaConfig, Paths, PipelineConfig, SelectionConfig, SimulateConfig, SEED_LABELS};
pub use report::{RunManifest, TopicEntry, TopicsFile, WordWeight, TOPICS_SCHEMA, TOPICS_SCHEMA_ID};
pub use simulate::{SimulatedDoc, Truth};

pub const TOKENS: &str = "tokens.jsonl";
pub const INGEST_STATS: &str = "ingest_stats.json";
pub const NEGATIVE_CORPUS: &str = "negative_corpus.json";
pub const SENTIMENT_STATS: &str = "sentiment_stats.json";
pub const CURVE: &str = "curve.csv";
pub const SELECTION: &str = "selection.json";
pub const MODEL: &str = "model.json";
pub const TOPICS: &str = "topics.json";
pub const GRAPH: &str = "graph.json";
pub const TOPIC_WORDS: &str = "topic_words.csv";
pub const MANIFEST: &str = "manifest.json";
pub const REPORT: &str = "report.txt";
pub const SIMULATED: &str = "simulated.jsonl";
pub const TRUTH: &str = "truth.json";
pub const TIMINGS: &str = "timings.json";

/// Processing order of the cleaning and filtering steps, echoed in the manifest.
pub const STAGE_ORDER: [&str; 4] = ["tokenize", "stopwords", "sentiment", "vocabulary"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputFile {
    /// Path as configured, or `builtin` for a shipped default.
    pub source: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub input: InputFile,
    pub lines: usize,
    pub malformed: usize,
    pub skipped_lang: usize,
    pub duplicate_ids: usize,
    /// Records with no tokens left after cleaning.
    pub dropped_empty: usize,
    pub docs: usize,
    pub tokens: usize,
    pub per_category: BTreeMap<String, usize>,
    pub uncategorized: usize,
}

/// The modeling corpus: negative documents in integer form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativeCorpus {
    pub rules: TokenizerRules,
    pub min_count: u64,
    pub vocabulary: Vocabulary,
    pub documents: Vec<TokenizedDocument>,
    pub dropped_empty: usize,
}

/// `sentiment_stats.json` holds `stats` alone, as `{total, negative, fraction}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentStats {
    pub stats: NegativeStats,
    pub vocabulary_size: usize,
    pub modeled_docs: usize,
    pub modeled_tokens: usize,
}

pub(crate) fn out_path(config: &PipelineConfig, name: &str) -> PathBuf {
    config.out_dir.join(name)
}

fn ensure_out_dir(config: &PipelineConfig) -> Result<()> {
    fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(&config.out_dir, e))
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub(crate) fn read_artifact<T: DeserializeOwned>(config: &PipelineConfig, name: &str, stage: &'static str) -> Result<T> {
    let path = out_path(config, name);
    let text = fs::read_to_string(&path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingArtifact {
            stage,
            path: path.clone(),
        },
        _ => Error::io(&path, e),
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Json { path, source: e })
}

fn record_timing(config: &PipelineConfig, stage: &str, started: Instant) -> Result<()> {
    let path = out_path(config, TIMINGS);
    let mut timings: BTreeMap<String, f64> = fs::read_to_string(&path)
        .ok()
        .and_then(|t| serde_json::from_str(&t).ok())
        .unwrap_or_default();
    timings.insert(stage.to_string(), started.elapsed().as_secs_f64());
    write_json(&path, &timings)
}

pub fn load_stopwords(config: &PipelineConfig) -> Result<StopWordList> {
    match &config.paths.stopwords {
        Some(p) => StopWordList::load(p),
        None => Ok(corpus::default_stopwords()),
    }
}

pub fn load_queries(config: &PipelineConfig) -> Result<QuerySet> {
    match &config.paths.queries {
        Some(p) => QuerySet::load(p),
        None => Ok(QuerySet::default()),
    }
}

pub fn load_lexicon(config: &PipelineConfig) -> Result<SentimentLexicon> {
    match (&config.paths.positive_lexicon, &config.paths.negative_lexicon) {
        (Some(p), Some(n)) => sentiment::load_lexicon(p, n),
        _ => Ok(SentimentLexicon::default()),
    }
}

pub fn load_seeds(config: &PipelineConfig) -> Result<SeedLexicon> {
    match &config.paths.seeds {
        Some(p) => SeedLexicon::load(p, config.labeling.contains_stem),
        None => Ok(SeedLexicon::builtin(config.labeling.contains_stem)),
    }
}

/// Ingest, tokenize, remove stop words and tag categories.
pub fn run_ingest(config: &PipelineConfig) -> Result<IngestStats> {
    let started = Instant::now();
    config.validate()?;
    let input = config
        .paths
        .input
        .as_deref()
        .ok_or_else(|| Error::Config("no input corpus configured (paths.input)".into()))?;
    let stoplist = load_stopwords(config)?;
    let queries = load_queries(config)?;

    let ingested = corpus::ingest(input, config.lang.as_deref())?;
    if ingested.documents.is_empty() {
        return Err(Error::NoDocuments(format!(
            "{} has no usable records ({} lines, {} skipped by language)",
            input.display(),
            ingested.report.lines,
            ingested.report.skipped_lang
        )));
    }
    let cleaned = clean_all(&ingested.documents, &config.tokenizer, &stoplist, &queries);
    let before = cleaned.len();
    let cleaned: Vec<CleanDocument> = cleaned.into_iter().filter(|d| !d.tokens.is_empty()).collect();

    let mut per_category: BTreeMap<String, usize> = queries.categories().map(|c| (c.to_string(), 0)).collect();
    let mut uncategorized = 0;
    for d in &cleaned {
        if d.categories.is_empty() {
            uncategorized += 1;
        }
        for c in &d.categories {
            *per_category.get_mut(c).expect("category from query set") += 1;
        }
    }
    let stats = IngestStats {
        input: report::hash_input(Some(input), "")?,
        lines: ingested.report.lines,
        malformed: ingested.report.malformed,
        skipped_lang: ingested.report.skipped_lang,
        duplicate_ids: ingested.report.duplicate_ids,
        dropped_empty: before - cleaned.len(),
        docs: cleaned.len(),
        tokens: cleaned.iter().map(|d| d.tokens.len()).sum(),
        per_category,
        uncategorized,
    };

    ensure_out_dir(config)?;
    let path = out_path(config, TOKENS);
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = BufWriter::new(file);
    for d in &cleaned {
        serde_json::to_writer(&mut w, d).expect("document serializes");
        w.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    write_json(&out_path(config, INGEST_STATS), &stats)?;
    record_timing(config, "ingest", started)?;
    Ok(stats)
}

pub fn read_tokens(config: &PipelineConfig) -> Result<Vec<CleanDocument>> {
    let path = out_path(config, TOKENS);
    let file = fs::File::open(&path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingArtifact {
            stage: "ingest",
            path: path.clone(),
        },
        _ => Error::io(&path, e),
    })?;
    let mut docs = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(&path, e))?;
        docs.push(serde_json::from_str(&line).map_err(|e| Error::Json {
            path: path.clone(),
            source: e,
        })?);
    }
    Ok(docs)
}

/// Keep negative documents and build the modeling vocabulary over them.
pub fn run_sentiment(config: &PipelineConfig) -> Result<SentimentStats> {
    let started = Instant::now();
    config.validate()?;
    let lexicon = load_lexicon(config)?;
    let docs = read_tokens(config)?;
    let (negative, stats) = filter_negative(docs, &lexicon);
    let built = build_vocabulary(&negative, config.min_count)?;
    let corpus = NegativeCorpus {
        rules: config.tokenizer,
        min_count: config.min_count,
        vocabulary: built.vocabulary,
        documents: built.documents,
        dropped_empty: built.dropped_empty,
    };
    let out = SentimentStats {
        stats,
        vocabulary_size: corpus.vocabulary.len(),
        modeled_docs: corpus.documents.len(),
        modeled_tokens: corpus.documents.iter().map(|d| d.tokens.len()).sum(),
    };
    ensure_out_dir(config)?;
    let mut text = serde_json::to_string(&corpus).expect("corpus serializes");
    text.push('\n');
    write_bytes(&out_path(config, NEGATIVE_CORPUS), text.as_bytes())?;
    write_json(&out_path(config, SENTIMENT_STATS), &out.stats)?;
    record_timing(config, "sentiment", started)?;
    Ok(out)
}

pub fn read_negative_corpus(config: &PipelineConfig) -> Result<NegativeCorpus> {
    read_artifact(config, NEGATIVE_CORPUS, "sentiment")
}

pub fn split_spec(config: &PipelineConfig) -> SplitSpec {
    SplitSpec {
        train_fraction: config.selection.train_fraction,
        seed: config.stage_seed("split"),
    }
}

pub fn eval_config(config: &PipelineConfig) -> EvalConfig {
    EvalConfig {
        particles: config.selection.particles,
        seed: config.stage_seed("eval"),
    }
}

/// Sweep the K grid on an 80/20 split and record the likelihood curve.
pub fn run_select_k(config: &PipelineConfig) -> Result<Selection> {
    let started = Instant::now();
    config.validate()?;
    let corpus = read_negative_corpus(config)?;
    let selection = model_selection::select_k(
        &corpus.documents,
        &corpus.vocabulary,
        &config.lda.k_grid,
        &config.hyper_template(),
        &split_spec(config),
        &eval_config(config),
    )?;
    let mut csv = Vec::new();
    write_curve_csv(&selection.curve, &mut csv)?;
    write_bytes(&out_path(config, CURVE), &csv)?;
    write_json(&out_path(config, SELECTION), &selection)?;
    record_timing(config, "select-k", started)?;
    Ok(selection)
}

/// K for training: the configured override, else the selected K.
pub fn training_k(config: &PipelineConfig) -> Result<usize> {
    match config.lda.k {
        Some(k) => Ok(k),
        None => {
            let sel: Selection = read_artifact(config, SELECTION, "select-k")?;
            Ok(sel.best_k)
        }
    }
}

pub fn run_train(config: &PipelineConfig) -> Result<TopicModel> {
    let started = Instant::now();
    config.validate()?;
    let corpus = read_negative_corpus(config)?;
    let k = training_k(config)?;
    let hyper = config.hyper_template().with_k(k);
    let model = lda::train(&corpus.documents, &corpus.vocabulary, &hyper)?;
    model.save(&out_path(config, MODEL))?;
    record_timing(config, "train", started)?;
    Ok(model)
}

pub fn read_model(config: &PipelineConfig) -> Result<TopicModel> {
    let path = out_path(config, MODEL);
    if !path.is_file() {
        return Err(Error::MissingArtifact { stage: "train", path });
    }
    TopicModel::load(&path)
}

pub use report::run_report;
pub use simulate::run_simulate;

/// Every analysis stage in order.
pub fn run_all(config: &PipelineConfig) -> Result<()> {
    run_ingest(config)?;
    run_sentiment(config)?;
    if config.lda.k.is_none() {
        run_select_k(config)?;
    }
    run_train(config)?;
    run_report(config)?;
    Ok(())
}

/// Files whose bytes are a pure function of the configuration and inputs.
pub const DETERMINISTIC_ARTIFACTS: [&str; 14] = [
    SIMULATED,
    TOKENS,
    INGEST_STATS,
    NEGATIVE_CORPUS,
    SENTIMENT_STATS,
    CURVE,
    SELECTION,
    MODEL,
    TOPICS,
    GRAPH,
    TOPIC_WORDS,
    MANIFEST,
    REPORT,
    TRUTH,
];
