use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::*;
use crate::corpus::DEFAULT_QUERIES;
use crate::labeling::{
    assignments, attach_subtopics, build_relationship_graph, summarize_topics, AssignmentKind, CategoryGraph,
    DEFAULT_SEEDS, NON_HEALTH,
};
use crate::lda::Hyperparams;
use crate::rng::sha256_hex;
use crate::sentiment::{DEFAULT_NEGATIVE, DEFAULT_POSITIVE};

/// JSON Schema for `topics.json`.
pub const TOPICS_SCHEMA: &str = include_str!("../../data/topics.schema.json");
pub const TOPICS_SCHEMA_ID: &str = "ddeo.topics/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopicsFile {
    pub schema: String,
    pub top_n: usize,
    pub tau: f64,
    pub contains_stem: bool,
    pub topics: Vec<TopicEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopicEntry {
    pub id: usize,
    /// Main category when the top words are a majority of its seeds.
    pub label: Option<String>,
    pub assignment: AssignmentKind,
    /// Category the topic is listed under (`Non-Health` for the leftover bucket).
    pub category: String,
    pub subtopic_name: Option<String>,
    pub top_words: Vec<WordWeight>,
    pub seed_hits: BTreeMap<String, usize>,
    pub category_mass: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WordWeight {
    pub word: String,
    pub weight: f64,
}

/// Everything needed to reproduce a run: resolved configuration, derived
/// seeds, input hashes and corpus statistics. Timings are kept out of it (see
/// `timings.json`) so the manifest is byte-stable across identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub prng: String,
    pub config: PipelineConfig,
    pub stage_seeds: BTreeMap<String, u64>,
    pub stage_order: Vec<String>,
    pub inputs: BTreeMap<String, InputFile>,
    pub ingest: IngestStats,
    pub sentiment: NegativeStats,
    pub vocabulary_size: usize,
    pub vocabulary_hash: String,
    /// Hyperparameters the model was actually trained with.
    pub model_hyper: Hyperparams,
    pub modeled_docs: usize,
    pub modeled_tokens: usize,
    pub selected_k: Option<usize>,
    pub trained_k: usize,
    pub model_sha256: String,
}

pub(crate) fn hash_input(path: Option<&Path>, builtin: &str) -> Result<InputFile> {
    Ok(match path {
        Some(p) => {
            let mut hasher = Sha256::new();
            let mut file = fs::File::open(p).map_err(|e| Error::io(p, e))?;
            std::io::copy(&mut file, &mut hasher).map_err(|e| Error::io(p, e))?;
            InputFile {
                source: p.display().to_string(),
                sha256: hex::encode(hasher.finalize()),
            }
        }
        None => InputFile {
            source: "builtin".into(),
            sha256: sha256_hex(builtin.as_bytes()),
        },
    })
}

fn build_manifest(
    config: &PipelineConfig,
    ingest: IngestStats,
    sentiment: NegativeStats,
    corpus: &NegativeCorpus,
    selection: Option<&Selection>,
    model: &TopicModel,
    model_bytes: &[u8],
) -> Result<RunManifest> {
    let p = &config.paths;
    let mut inputs = BTreeMap::new();
    inputs.insert("input".to_string(), ingest.input.clone());
    inputs.insert("stopwords".into(), hash_input(p.stopwords.as_deref(), corpus::DEFAULT_STOPWORDS)?);
    inputs.insert("queries".into(), hash_input(p.queries.as_deref(), DEFAULT_QUERIES)?);
    inputs.insert(
        "positive_lexicon".into(),
        hash_input(p.positive_lexicon.as_deref(), DEFAULT_POSITIVE)?,
    );
    inputs.insert(
        "negative_lexicon".into(),
        hash_input(p.negative_lexicon.as_deref(), DEFAULT_NEGATIVE)?,
    );
    inputs.insert("seeds".into(), hash_input(p.seeds.as_deref(), DEFAULT_SEEDS)?);

    Ok(RunManifest {
        tool: "ddeo".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        prng: "ChaCha8 (rand_chacha); sub-seeds = first 8 bytes LE of SHA-256(seed_le || label)".into(),
        config: config.clone(),
        stage_seeds: SEED_LABELS
            .iter()
            .map(|l| (l.to_string(), config.stage_seed(l)))
            .collect(),
        stage_order: STAGE_ORDER.iter().map(|s| s.to_string()).collect(),
        inputs,
        ingest,
        sentiment,
        vocabulary_size: corpus.vocabulary.len(),
        vocabulary_hash: corpus.vocabulary.hash(),
        model_hyper: *model.hyper(),
        modeled_docs: corpus.documents.len(),
        modeled_tokens: corpus.documents.iter().map(|d| d.tokens.len()).sum(),
        selected_k: selection.map(|s| s.best_k),
        trained_k: model.topics(),
        model_sha256: sha256_hex(model_bytes),
    })
}

/// Label topics, build the category graph and write every report artifact.
pub fn run_report(config: &PipelineConfig) -> Result<RunManifest> {
    let started = Instant::now();
    config.validate()?;
    let ingest: IngestStats = read_artifact(config, INGEST_STATS, "ingest")?;
    let sentiment: NegativeStats = read_artifact(config, SENTIMENT_STATS, "sentiment")?;
    let corpus = read_negative_corpus(config)?;
    let model = read_model(config)?;
    let model_bytes = fs::read(out_path(config, MODEL)).map_err(|e| Error::io(out_path(config, MODEL), e))?;
    let selection: Option<Selection> = if config.lda.k.is_none() {
        Some(read_artifact(config, SELECTION, "select-k")?)
    } else {
        read_artifact(config, SELECTION, "select-k").ok()
    };

    let seeds = load_seeds(config)?;
    seeds.check_covers(&load_queries(config)?)?;
    let summaries = summarize_topics(&model, &corpus.vocabulary, &corpus.documents, &seeds, config.labeling.top_n)?;
    let attached = attach_subtopics(&summaries, &seeds, config.labeling.tau)?;
    let assigned = assignments(&summaries, &attached);
    let graph = build_relationship_graph(&summaries, &assigned, &seeds);

    let topics = TopicsFile {
        schema: TOPICS_SCHEMA_ID.into(),
        top_n: config.labeling.top_n,
        tau: config.labeling.tau,
        contains_stem: config.labeling.contains_stem,
        topics: summaries
            .iter()
            .zip(&assigned)
            .map(|(s, a)| TopicEntry {
                id: s.topic,
                label: s.label.category().map(str::to_string),
                assignment: a.kind,
                category: a.category.clone(),
                subtopic_name: a.subtopic_name.clone(),
                top_words: s
                    .top_words
                    .iter()
                    .map(|w| WordWeight {
                        word: w.word.clone(),
                        weight: w.weight,
                    })
                    .collect(),
                seed_hits: s.seed_hits.clone(),
                category_mass: s.category_mass.clone(),
            })
            .collect(),
    };

    let manifest = build_manifest(
        config,
        ingest,
        sentiment,
        &corpus,
        selection.as_ref(),
        &model,
        &model_bytes,
    )?;

    write_json(&out_path(config, TOPICS), &topics)?;
    write_json(&out_path(config, GRAPH), &graph)?;
    write_json(&out_path(config, MANIFEST), &manifest)?;
    write_bytes(&out_path(config, TOPIC_WORDS), &topic_words_csv(&topics)?)?;
    let text = render_report(&manifest, selection.as_ref(), &topics, &graph);
    write_bytes(&out_path(config, REPORT), text.as_bytes())?;
    record_timing(config, "report", started)?;
    Ok(manifest)
}

fn topic_words_csv(topics: &TopicsFile) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |e: csv::Error| Error::Config(format!("writing topic words CSV: {e}"));
    w.write_record(["topic", "category", "assignment", "rank", "word", "weight"])
        .map_err(wrap)?;
    for t in &topics.topics {
        let kind = assignment_name(t.assignment);
        for (rank, ww) in t.top_words.iter().enumerate() {
            w.write_record([
                t.id.to_string(),
                t.category.clone(),
                kind.to_string(),
                (rank + 1).to_string(),
                ww.word.clone(),
                ww.weight.to_string(),
            ])
            .map_err(wrap)?;
        }
    }
    w.into_inner()
        .map_err(|e| Error::Config(format!("writing topic words CSV: {e}")))
}

fn assignment_name(kind: AssignmentKind) -> &'static str {
    match kind {
        AssignmentKind::Main => "main",
        AssignmentKind::Subtopic => "subtopic",
        AssignmentKind::NonHealth => "non_health",
    }
}

fn heading(out: &mut String, title: &str) {
    let _ = writeln!(out, "\n{title}\n{}", "-".repeat(title.chars().count()));
}

fn render_report(
    manifest: &RunManifest,
    selection: Option<&Selection>,
    topics: &TopicsFile,
    graph: &CategoryGraph,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Negative-topic report ({} {})", manifest.tool, manifest.version);
    let _ = writeln!(out, "{}", "=".repeat(40));

    heading(&mut out, "Corpus");
    let ing = &manifest.ingest;
    let _ = writeln!(out, "input               {} (sha256 {})", ing.input.source, ing.input.sha256);
    let _ = writeln!(out, "records read        {}", ing.lines);
    let _ = writeln!(out, "malformed           {}", ing.malformed);
    let _ = writeln!(out, "skipped (language)  {}", ing.skipped_lang);
    let _ = writeln!(out, "duplicate ids       {}", ing.duplicate_ids);
    let _ = writeln!(out, "empty after clean   {}", ing.dropped_empty);
    let _ = writeln!(out, "documents           {}", ing.docs);
    let _ = writeln!(out, "tokens              {}", ing.tokens);
    for (c, n) in &ing.per_category {
        let _ = writeln!(out, "  {c:<18}{n}");
    }
    let _ = writeln!(out, "  {:<18}{}", "(no category)", ing.uncategorized);
    let s = &manifest.sentiment;
    let _ = writeln!(out, "negative documents  {} of {} ({})", s.negative, s.total, s.fraction);
    let _ = writeln!(
        out,
        "modeled             {} documents, {} tokens, vocabulary {}",
        manifest.modeled_docs, manifest.modeled_tokens, manifest.vocabulary_size
    );

    heading(&mut out, "Topic-count selection");
    match selection {
        Some(sel) => {
            let _ = writeln!(
                out,
                "split: {} train / {} test documents, test partition {}",
                sel.train_docs,
                sel.test_docs,
                &sel.partition_hash[..16]
            );
            let _ = writeln!(out, "{:>6}  {:>22}  {:>22}  {:>11}  {:>11}", "k", "heldout_ll", "per_token_ll", "test_tokens", "oov_dropped");
            for r in &sel.curve {
                let mark = if r.k == sel.best_k { " *" } else { "" };
                let _ = writeln!(
                    out,
                    "{:>6}  {:>22}  {:>22}  {:>11}  {:>11}{mark}",
                    r.k, r.heldout_ll, r.per_token_ll, r.test_tokens, r.oov_dropped
                );
            }
            let _ = writeln!(out, "selected K = {}", sel.best_k);
        }
        None => {
            let _ = writeln!(out, "not run; K fixed by configuration");
        }
    }
    let _ = writeln!(out, "trained K = {}", manifest.trained_k);

    heading(&mut out, "Topics and sub-topics");
    // category -> (main topics, sub-topics)
    type Row = (Vec<String>, Vec<String>);
    let mut rows: BTreeMap<&str, Row> = BTreeMap::new();
    for node in &graph.nodes {
        rows.entry(node.as_str()).or_default();
    }
    for t in &topics.topics {
        let row = rows.entry(t.category.as_str()).or_default();
        match t.assignment {
            AssignmentKind::Main => row.0.push(format!("topic {}", t.id)),
            _ => row.1.push(format!(
                "{} (topic {})",
                t.subtopic_name.as_deref().unwrap_or(""),
                t.id
            )),
        }
    }
    // Non-Health last
    let mut ordered: Vec<(&str, Row)> =
        rows.into_iter().filter(|(c, _)| *c != NON_HEALTH).collect();
    let non_health: Vec<String> = topics
        .topics
        .iter()
        .filter(|t| t.assignment == AssignmentKind::NonHealth)
        .map(|t| format!("{} (topic {})", t.subtopic_name.as_deref().unwrap_or(""), t.id))
        .collect();
    ordered.push((NON_HEALTH, (Vec::new(), non_health)));
    for (category, (main, subs)) in ordered {
        let _ = writeln!(out, "{category}");
        let _ = writeln!(
            out,
            "  main:       {}",
            if main.is_empty() { "-".to_string() } else { main.join(", ") }
        );
        let _ = writeln!(
            out,
            "  sub-topics: {}",
            if subs.is_empty() { "-".to_string() } else { subs.join("; ") }
        );
    }

    heading(&mut out, "Category relationships");
    if graph.edges.is_empty() {
        let _ = writeln!(out, "(none)");
    }
    for e in &graph.edges {
        let witnesses: Vec<String> = e
            .witnesses
            .iter()
            .map(|w| format!("topic {} {:?} [{}]", w.topic, w.word, w.seed))
            .collect();
        let _ = writeln!(out, "{} -> {} (weight {}): {}", e.from, e.to, e.weight, witnesses.join(", "));
    }

    heading(&mut out, "Topic words");
    for t in &topics.topics {
        let _ = writeln!(
            out,
            "topic {} [{} / {}{}]",
            t.id,
            t.category,
            assignment_name(t.assignment),
            t.subtopic_name
                .as_deref()
                .map(|n| format!(" \"{n}\""))
                .unwrap_or_default()
        );
        for w in &t.top_words {
            let _ = writeln!(out, "  {:<24}{}", w.word, w.weight);
        }
    }

    heading(&mut out, "Run manifest");
    let _ = writeln!(
        out,
        "{}",
        serde_json::to_string_pretty(manifest).expect("manifest serializes")
    );
    out
}
