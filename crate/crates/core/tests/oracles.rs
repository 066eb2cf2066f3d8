mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;

use ddeo_core::corpus::{build_vocabulary, ingest_reader, CleanDocument, QuerySet};
use ddeo_core::labeling::{assignments, attach_subtopics, summarize_topics, AssignmentKind, SeedLexicon};
use ddeo_core::lda::{self, generate_corpus, Hyperparams};
use ddeo_core::model_selection::left_to_right;
use ddeo_core::pipeline::{self, PipelineConfig, TOPICS_SCHEMA};
use ddeo_core::{rng, Error};
use rand::Rng;
use serde_json::Value;

#[test]
fn ingest_counts_malformed_lines() {
    let mut text = String::new();
    let mut r = common::rng(1);
    for i in 0..100 {
        let line = match i {
            13 => "{\"id\": \"13\", \"text\": ".to_string(),
            27 => "{\"text\": \"no id here\"}".to_string(),
            58 => "{\"id\": \"\", \"text\": \"empty id\"}".to_string(),
            91 => "not json at all".to_string(),
            _ => format!("{{\"id\": \"t{i}\", \"text\": \"word{} and more\"}}", r.random_range(0..50)),
        };
        writeln!(text, "{line}").unwrap();
    }
    // independent scan: a record is good when it parses and has a non-empty
    // string id and a string text
    let good = text
        .lines()
        .filter(|l| {
            serde_json::from_str::<Value>(l).ok().is_some_and(|v| {
                v["id"].as_str().is_some_and(|s| !s.is_empty()) && v["text"].is_string()
            })
        })
        .count();
    assert_eq!(good, 96);
    let got = ingest_reader(text.as_bytes(), "fixture".as_ref(), None).unwrap();
    assert_eq!(got.documents.len(), good);
    assert_eq!(got.report.malformed, 4);
    assert_eq!(got.report.lines, 100);
}

#[test]
fn mostly_malformed_input_is_fatal() {
    let text = "x\ny\n{\"id\": \"a\", \"text\": \"ok\"}\n";
    assert!(matches!(
        ingest_reader(text.as_bytes(), "f".as_ref(), None),
        Err(Error::MostlyMalformed { .. })
    ));
}

#[test]
fn vocabulary_matches_frequency_scan() {
    let mut r = common::rng(2);
    let docs: Vec<CleanDocument> = (0..1000)
        .map(|i| CleanDocument {
            id: i.to_string(),
            // Zipf-ish: low indices frequent, high indices rare
            tokens: (0..r.random_range(0..12))
                .map(|_| {
                    let x: f64 = r.random();
                    format!("w{}", (x * x * x * 800.0) as u32)
                })
                .collect(),
            categories: BTreeSet::new(),
        })
        .collect();
    let mut freq: HashMap<&str, u64> = HashMap::new();
    for d in &docs {
        for t in &d.tokens {
            *freq.entry(t).or_default() += 1;
        }
    }
    let want: BTreeSet<&str> = freq.iter().filter(|(_, &c)| c >= 5).map(|(w, _)| *w).collect();
    let built = build_vocabulary(&docs, 5).unwrap();
    let got: BTreeSet<&str> = built.vocabulary.words().iter().map(String::as_str).collect();
    assert_eq!(got, want);
    for (i, w) in built.vocabulary.words().iter().enumerate() {
        assert_eq!(built.vocabulary.frequency(i as u32), freq[w.as_str()]);
    }
    // surviving tokens: every in-vocabulary occurrence, nothing else
    let kept: usize = built.documents.iter().map(|d| d.tokens.len()).sum();
    let expected: u64 = want.iter().map(|w| freq[w]).sum();
    assert_eq!(kept as u64, expected);
}

#[test]
fn generated_unigrams_converge_to_mixture() {
    let phi = vec![
        vec![0.5, 0.3, 0.1, 0.05, 0.05, 0.0],
        vec![0.0, 0.1, 0.2, 0.3, 0.2, 0.2],
        vec![0.2, 0.0, 0.0, 0.1, 0.3, 0.4],
    ];
    let alpha = [20.0, 40.0, 60.0];
    let sum: f64 = alpha.iter().sum();
    let corpus = generate_corpus(&phi, &alpha, 10_000, 10.0, 3).unwrap();
    let tokens: usize = corpus.docs.iter().map(Vec::len).sum();
    assert!(tokens >= 95_000, "{tokens} tokens");
    let mut counts = [0usize; 6];
    for w in corpus.docs.iter().flatten() {
        counts[*w as usize] += 1;
    }
    let l1: f64 = (0..6)
        .map(|w| {
            let mixture: f64 = (0..3).map(|k| alpha[k] / sum * phi[k][w]).sum();
            (counts[w] as f64 / tokens as f64 - mixture).abs()
        })
        .sum();
    assert!(l1 < 0.01, "L1 = {l1}");
}

#[test]
fn more_particles_shrink_estimator_spread() {
    let counts = vec![vec![9, 1, 4, 0, 2], vec![1, 8, 0, 6, 3]];
    let (model, _) = common::model_from_counts(&counts, 1.0, 0.5);
    let words = [0u32, 1, 3, 0, 2, 4, 1];
    let spread = |particles: usize| {
        let xs: Vec<f64> = (0..200)
            .map(|s| left_to_right(&model, &words, particles, &mut rng::seeded(s)))
            .collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
    };
    let (s5, s50) = (spread(5), spread(50));
    assert!(s50 < s5, "sd R=5 {s5}, R=50 {s50}");
}

#[test]
fn planted_exercise_topic_is_attached_to_exercise() {
    // topic A words appear only in Exercise-tagged documents, topic B words
    // only in Diet-tagged ones; none are seeds
    let mut r = common::rng(4);
    let mut docs = Vec::new();
    let mut words: Vec<String> = Vec::new();
    for g in ["stretch", "soup"] {
        for i in 0..10 {
            words.push(format!("{g}{i}"));
        }
    }
    for i in 0..400 {
        let (offset, cat) = if i % 2 == 0 { (0, "Exercise") } else { (10, "Diet") };
        docs.push(CleanDocument {
            id: i.to_string(),
            tokens: (0..8).map(|_| words[offset + r.random_range(0..10)].clone()).collect(),
            categories: [cat.to_string()].into(),
        });
    }
    let built = build_vocabulary(&docs, 1).unwrap();
    let hyper = Hyperparams {
        k: 2,
        iterations: 200,
        seed: 5,
        ..Hyperparams::default()
    };
    let model = lda::train(&built.documents, &built.vocabulary, &hyper).unwrap();
    let seeds = SeedLexicon::default();
    let summaries = summarize_topics(&model, &built.vocabulary, &built.documents, &seeds, 5).unwrap();
    let attached = attach_subtopics(&summaries, &seeds, 0.5).unwrap();
    let assigned = assignments(&summaries, &attached);
    let stretch = summaries
        .iter()
        .find(|s| s.top_words[0].word.starts_with("stretch"))
        .expect("a topic dominated by the planted words");
    let a = &assigned[stretch.topic];
    assert_eq!(a.kind, AssignmentKind::Subtopic);
    assert_eq!(a.category, "Exercise");
    assert!(a.subtopic_name.as_deref().unwrap().starts_with("stretch"));
}

fn write_fixture(dir: &std::path::Path) -> (std::path::PathBuf, Vec<String>) {
    let mut r = common::rng(6);
    let pool = [
        "diabetes", "#diabetes", "diet", "#diet", "exercise", "#exercise", "obesity", "#obesity", "sad", "hate",
        "pain", "happy", "sugar", "gym", "today", "really", "feeling", "bad",
    ];
    let mut texts = Vec::new();
    let mut body = String::new();
    for i in 0..100 {
        let text: Vec<&str> = (0..r.random_range(1..9)).map(|_| pool[r.random_range(0..pool.len())]).collect();
        let text = text.join(" ");
        writeln!(body, "{}", serde_json::json!({"id": format!("f{i}"), "text": text, "lang": "en"})).unwrap();
        texts.push(text);
    }
    let path = dir.join("fixture.jsonl");
    fs::write(&path, body).unwrap();
    (path, texts)
}

#[test]
fn ingest_stage_category_counts_match_scan() {
    let dir = tempfile::tempdir().unwrap();
    let (input, texts) = write_fixture(dir.path());
    let mut config = PipelineConfig {
        out_dir: dir.path().join("out"),
        ..PipelineConfig::default()
    };
    config.paths.input = Some(input);
    let stats = pipeline::run_ingest(&config).unwrap();
    assert_eq!(stats.docs + stats.dropped_empty, 100);

    let queries = QuerySet::default();
    let mut want: BTreeMap<String, usize> = queries.categories().map(|c| (c.to_string(), 0)).collect();
    for t in &texts {
        let words: BTreeSet<&str> = t.split_whitespace().map(|w| w.trim_start_matches('#')).collect();
        for c in queries.categories() {
            let terms = queries.terms(c).unwrap();
            if terms.iter().any(|q| words.contains(q.trim_start_matches('#'))) {
                *want.get_mut(c).unwrap() += 1;
            }
        }
    }
    assert_eq!(stats.per_category, want);
}

#[test]
fn stages_report_missing_upstream_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = PipelineConfig {
        out_dir: dir.path().join("out"),
        ..PipelineConfig::default()
    };
    let err = pipeline::run_train(&config).unwrap_err();
    assert!(matches!(err, Error::MissingArtifact { stage: "sentiment", .. }), "{err}");
    let err = pipeline::run_sentiment(&config).unwrap_err();
    assert!(matches!(err, Error::MissingArtifact { stage: "ingest", .. }), "{err}");
}

fn small_run(dir: &std::path::Path) -> PipelineConfig {
    let mut config = PipelineConfig {
        out_dir: dir.join("out"),
        seed: 3,
        ..PipelineConfig::default()
    };
    config.simulate.docs = 1500;
    config.lda.iterations = 100;
    config.lda.k_grid = vec![2, 6];
    config.selection.particles = 3;
    pipeline::run_simulate(&config).unwrap();
    let input = dir.join("input.jsonl");
    fs::copy(config.out_dir.join(pipeline::SIMULATED), &input).unwrap();
    config.paths.input = Some(input);
    pipeline::run_all(&config).unwrap();
    config
}

fn keys(v: &Value) -> BTreeSet<String> {
    v.as_object().unwrap().keys().cloned().collect()
}

fn required(schema: &Value) -> BTreeSet<String> {
    schema["required"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s.as_str().unwrap().to_string())
        .collect()
}

#[test]
fn report_artifacts_follow_schema_and_graph_invariants() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_run(dir.path());
    let topics: Value = serde_json::from_slice(&fs::read(config.out_dir.join(pipeline::TOPICS)).unwrap()).unwrap();
    let schema: Value = serde_json::from_str(TOPICS_SCHEMA).unwrap();
    assert_eq!(topics["schema"], schema["properties"]["schema"]["const"]);
    assert_eq!(keys(&topics), required(&schema));
    let item = &schema["properties"]["topics"]["items"];
    let kinds: Vec<&Value> = item["properties"]["assignment"]["enum"].as_array().unwrap().iter().collect();
    let list = topics["topics"].as_array().unwrap();
    assert_eq!(list.len(), pipeline::training_k(&config).unwrap());
    for t in list {
        assert_eq!(keys(t), required(item));
        assert!(kinds.contains(&&t["assignment"]));
        for w in t["top_words"].as_array().unwrap() {
            let weight = w["weight"].as_f64().unwrap();
            assert!((0.0..=1.0).contains(&weight));
        }
    }

    // every graph edge is witnessed by a top word of the source topic
    let graph: Value = serde_json::from_slice(&fs::read(config.out_dir.join(pipeline::GRAPH)).unwrap()).unwrap();
    for e in graph["edges"].as_array().unwrap() {
        let witnesses = e["witnesses"].as_array().unwrap();
        assert!(!witnesses.is_empty());
        for w in witnesses {
            let topic = &list[w["topic"].as_u64().unwrap() as usize];
            assert_eq!(topic["category"], e["from"]);
            assert!(topic["top_words"]
                .as_array()
                .unwrap()
                .iter()
                .any(|tw| tw["word"] == w["word"]));
        }
    }

    // manifest echoes the resolved configuration
    let manifest: pipeline::RunManifest =
        serde_json::from_slice(&fs::read(config.out_dir.join(pipeline::MANIFEST)).unwrap()).unwrap();
    assert_eq!(manifest.config, config);
    assert_eq!(manifest.stage_seeds["lda"], config.stage_seed("lda"));
    let report = fs::read_to_string(config.out_dir.join(pipeline::REPORT)).unwrap();
    assert!(report.contains("selected K ="));
}

#[test]
fn rerunning_a_stage_leaves_earlier_artifacts_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_run(dir.path());
    let tokens = fs::read(config.out_dir.join(pipeline::TOKENS)).unwrap();
    let negative = fs::read(config.out_dir.join(pipeline::NEGATIVE_CORPUS)).unwrap();
    let model = fs::read(config.out_dir.join(pipeline::MODEL)).unwrap();
    fs::remove_file(config.out_dir.join(pipeline::MODEL)).unwrap();
    fs::remove_file(config.out_dir.join(pipeline::TOPICS)).unwrap();
    pipeline::run_sentiment(&config).unwrap();
    pipeline::run_train(&config).unwrap();
    assert_eq!(fs::read(config.out_dir.join(pipeline::TOKENS)).unwrap(), tokens);
    assert_eq!(fs::read(config.out_dir.join(pipeline::NEGATIVE_CORPUS)).unwrap(), negative);
    assert_eq!(fs::read(config.out_dir.join(pipeline::MODEL)).unwrap(), model);
}
