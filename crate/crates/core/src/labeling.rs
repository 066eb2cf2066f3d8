//! Topic labeling against per-category seed stems.
//!
//! A topic whose top words are more than half hits for exactly one category is
//! labeled with it. Other topics are attached as sub-topics to the category
//! whose tagged documents carry most of the topic's weight, or routed to the
//! Non-Health bucket when no category holds at least `tau` of that weight.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{parse_sections, read_to_string, QuerySet, TokenizedDocument, Vocabulary};
use crate::error::{Error, Result};
use crate::lda::{top_words, TopicModel};

pub const DEFAULT_SEEDS: &str = include_str!("../data/seeds.txt");
pub const NON_HEALTH: &str = "Non-Health";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedTerm {
    pub stem: String,
    pub wildcard: bool,
}

impl SeedTerm {
    pub fn parse(term: &str) -> Self {
        match term.strip_suffix('*') {
            Some(stem) if !stem.is_empty() => SeedTerm {
                stem: stem.to_string(),
                wildcard: true,
            },
            _ => SeedTerm {
                stem: term.to_string(),
                wildcard: false,
            },
        }
    }

    /// Wildcards match words starting with the stem, or, with `contains_stem`,
    /// words containing it anywhere (`prediabetes`, `stopdiabetes`). Plain
    /// terms match exactly.
    pub fn matches(&self, word: &str, contains_stem: bool) -> bool {
        let word = word.strip_prefix('#').unwrap_or(word);
        if !self.wildcard {
            return word == self.stem;
        }
        if contains_stem {
            word.contains(self.stem.as_str())
        } else {
            word.starts_with(self.stem.as_str())
        }
    }

    pub fn display(&self) -> String {
        if self.wildcard {
            format!("{}*", self.stem)
        } else {
            self.stem.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedLexicon {
    categories: BTreeMap<String, Vec<SeedTerm>>,
    contains_stem: bool,
}

impl SeedLexicon {
    pub fn new(categories: BTreeMap<String, Vec<SeedTerm>>, contains_stem: bool) -> Result<Self> {
        if categories.is_empty() {
            return Err(Error::InvalidParameter("seed lexicon has no categories".into()));
        }
        if let Some((name, _)) = categories.iter().find(|(_, t)| t.is_empty()) {
            return Err(Error::InvalidParameter(format!("seed category {name:?} is empty")));
        }
        if categories.contains_key(NON_HEALTH) {
            return Err(Error::InvalidParameter(format!("{NON_HEALTH:?} is reserved")));
        }
        Ok(Self {
            categories,
            contains_stem,
        })
    }

    pub fn parse(text: &str, source: &Path, contains_stem: bool) -> Result<Self> {
        let categories = parse_sections(text, source)?
            .into_iter()
            .map(|(name, terms)| (name, terms.iter().map(|t| SeedTerm::parse(t)).collect()))
            .collect();
        Self::new(categories, contains_stem)
    }

    pub fn load(path: &Path, contains_stem: bool) -> Result<Self> {
        Self::parse(&read_to_string(path)?, path, contains_stem)
    }

    pub fn builtin(contains_stem: bool) -> Self {
        Self::parse(DEFAULT_SEEDS, Path::new("<builtin seeds>"), contains_stem).expect("builtin seeds")
    }

    pub fn categories(&self) -> impl Iterator<Item = &str> {
        self.categories.keys().map(String::as_str)
    }

    pub fn contains_stem(&self) -> bool {
        self.contains_stem
    }

    /// Every query category must have seeds.
    pub fn check_covers(&self, queries: &QuerySet) -> Result<()> {
        for c in queries.categories() {
            if !self.categories.contains_key(c) {
                return Err(Error::Config(format!("seed lexicon lacks query category {c:?}")));
            }
        }
        Ok(())
    }

    /// First seed term of `category` matching `word`.
    pub fn matching_term(&self, category: &str, word: &str) -> Option<&SeedTerm> {
        self.categories
            .get(category)?
            .iter()
            .find(|t| t.matches(word, self.contains_stem))
    }

    pub fn matches_any(&self, word: &str) -> bool {
        self.categories
            .values()
            .flatten()
            .any(|t| t.matches(word, self.contains_stem))
    }
}

impl Default for SeedLexicon {
    fn default() -> Self {
        Self::builtin(true)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Category(String),
    Unlabeled,
}

impl Label {
    pub fn category(&self) -> Option<&str> {
        match self {
            Label::Category(c) => Some(c),
            Label::Unlabeled => None,
        }
    }
}

/// Counts, per category, the top words matching any of its seeds, and labels
/// with the unique category whose count exceeds half the list.
pub fn label_topic<S: AsRef<str>>(top_words: &[S], seeds: &SeedLexicon) -> (Label, BTreeMap<String, usize>) {
    let n = top_words.len();
    let hits: BTreeMap<String, usize> = seeds
        .categories()
        .map(|c| {
            let count = top_words
                .iter()
                .filter(|w| seeds.matching_term(c, w.as_ref()).is_some())
                .count();
            (c.to_string(), count)
        })
        .collect();
    let mut majority = hits.iter().filter(|&(_, &h)| 2 * h > n);
    let label = match (majority.next(), majority.next()) {
        (Some((c, _)), None) => Label::Category(c.clone()),
        _ => Label::Unlabeled,
    };
    (label, hits)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopWord {
    pub id: u32,
    pub word: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSummary {
    pub topic: usize,
    pub top_words: Vec<TopWord>,
    pub label: Label,
    pub seed_hits: BTreeMap<String, usize>,
    /// Share of the topic's document weight falling on documents tagged with
    /// each category, normalized over categories.
    pub category_mass: BTreeMap<String, f64>,
}

/// Top words, label and category mass for every topic of `model`. `docs` must
/// be the documents the model was trained on, in training order.
pub fn summarize_topics(
    model: &TopicModel,
    vocab: &Vocabulary,
    docs: &[TokenizedDocument],
    seeds: &SeedLexicon,
    top_n: usize,
) -> Result<Vec<TopicSummary>> {
    if top_n == 0 {
        return Err(Error::InvalidParameter("top_n must be >= 1".into()));
    }
    if model.num_docs() != docs.len() {
        return Err(Error::InvalidParameter(format!(
            "model has {} documents, corpus has {}",
            model.num_docs(),
            docs.len()
        )));
    }
    if model.vocab_hash() != vocab.hash() {
        return Err(Error::VocabularyMismatch {
            expected: model.vocab_hash().to_string(),
            found: vocab.hash(),
        });
    }
    let k = model.topics();
    let mut mass = vec![BTreeMap::<String, f64>::new(); k];
    for (d, doc) in docs.iter().enumerate() {
        let theta = model.theta(d);
        for c in &doc.categories {
            for (t, m) in mass.iter_mut().enumerate() {
                *m.entry(c.clone()).or_default() += theta[t];
            }
        }
    }
    Ok((0..k)
        .map(|t| {
            let top: Vec<TopWord> = top_words(model, t, top_n)
                .into_iter()
                .map(|(id, weight)| TopWord {
                    id,
                    word: vocab.word(id).expect("word id in vocabulary").to_string(),
                    weight,
                })
                .collect();
            let words: Vec<&str> = top.iter().map(|w| w.word.as_str()).collect();
            let (label, seed_hits) = label_topic(&words, seeds);
            let mut category_mass = std::mem::take(&mut mass[t]);
            let total: f64 = category_mass.values().sum();
            if total > 0.0 {
                category_mass.values_mut().for_each(|m| *m /= total);
            }
            TopicSummary {
                topic: t,
                top_words: top,
                label,
                seed_hits,
                category_mass,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubTopic {
    pub topic: usize,
    pub name: String,
}

/// Attaches every unlabeled topic to its heaviest category when that category
/// holds at least `tau` of the topic's mass, else to [`NON_HEALTH`]. Labeled
/// topics are not listed.
pub fn attach_subtopics(
    summaries: &[TopicSummary],
    seeds: &SeedLexicon,
    tau: f64,
) -> Result<BTreeMap<String, Vec<SubTopic>>> {
    let mut out: BTreeMap<String, Vec<SubTopic>> = BTreeMap::new();
    for s in summaries {
        if s.label != Label::Unlabeled {
            continue;
        }
        let total: f64 = s.category_mass.values().sum();
        if s.category_mass.is_empty() || total <= 0.0 {
            return Err(Error::MissingCategoryTags(s.topic));
        }
        let (best, best_mass) = s
            .category_mass
            .iter()
            .fold(None::<(&String, f64)>, |acc, (c, &m)| match acc {
                Some((_, bm)) if bm >= m => acc,
                _ => Some((c, m)),
            })
            .expect("non-empty mass");
        let bucket = if best_mass / total >= tau {
            best.clone()
        } else {
            NON_HEALTH.to_string()
        };
        out.entry(bucket).or_default().push(SubTopic {
            topic: s.topic,
            name: subtopic_name(s, seeds),
        });
    }
    Ok(out)
}

/// Highest-weight top word matching no seed at all; falls back to the top
/// word when every top word is a seed hit.
pub fn subtopic_name(summary: &TopicSummary, seeds: &SeedLexicon) -> String {
    summary
        .top_words
        .iter()
        .find(|w| !seeds.matches_any(&w.word))
        .or_else(|| summary.top_words.first())
        .map(|w| w.word.clone())
        .unwrap_or_default()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentKind {
    Main,
    Subtopic,
    NonHealth,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicAssignment {
    pub topic: usize,
    pub kind: AssignmentKind,
    pub category: String,
    pub subtopic_name: Option<String>,
}

/// Exactly one assignment per topic, in topic order.
pub fn assignments(
    summaries: &[TopicSummary],
    attached: &BTreeMap<String, Vec<SubTopic>>,
) -> Vec<TopicAssignment> {
    let mut by_topic: BTreeMap<usize, TopicAssignment> = BTreeMap::new();
    for s in summaries {
        if let Label::Category(c) = &s.label {
            by_topic.insert(
                s.topic,
                TopicAssignment {
                    topic: s.topic,
                    kind: AssignmentKind::Main,
                    category: c.clone(),
                    subtopic_name: None,
                },
            );
        }
    }
    for (category, subs) in attached {
        let kind = if category == NON_HEALTH {
            AssignmentKind::NonHealth
        } else {
            AssignmentKind::Subtopic
        };
        for sub in subs {
            by_topic.insert(
                sub.topic,
                TopicAssignment {
                    topic: sub.topic,
                    kind,
                    category: category.clone(),
                    subtopic_name: Some(sub.name.clone()),
                },
            );
        }
    }
    by_topic.into_values().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub topic: usize,
    pub word: String,
    pub seed: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryEdge {
    pub from: String,
    pub to: String,
    /// Number of supporting topics.
    pub weight: usize,
    pub witnesses: Vec<Witness>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryGraph {
    pub nodes: Vec<String>,
    pub edges: Vec<CategoryEdge>,
}

/// Edge `C1 -> C2` for each topic assigned to `C1` (labeled or attached) whose
/// top words contain a seed hit for another category `C2`.
pub fn build_relationship_graph(
    summaries: &[TopicSummary],
    assigned: &[TopicAssignment],
    seeds: &SeedLexicon,
) -> CategoryGraph {
    let by_topic: BTreeMap<usize, &TopicSummary> = summaries.iter().map(|s| (s.topic, s)).collect();
    let mut edges: BTreeMap<(String, String), CategoryEdge> = BTreeMap::new();
    for a in assigned {
        if a.kind == AssignmentKind::NonHealth {
            continue;
        }
        let Some(summary) = by_topic.get(&a.topic) else {
            continue;
        };
        for target in seeds.categories().filter(|&c| c != a.category) {
            let witnesses: Vec<Witness> = summary
                .top_words
                .iter()
                .filter_map(|w| {
                    seeds.matching_term(target, &w.word).map(|t| Witness {
                        topic: a.topic,
                        word: w.word.clone(),
                        seed: t.display(),
                    })
                })
                .collect();
            if witnesses.is_empty() {
                continue;
            }
            let edge = edges
                .entry((a.category.clone(), target.to_string()))
                .or_insert_with(|| CategoryEdge {
                    from: a.category.clone(),
                    to: target.to_string(),
                    weight: 0,
                    witnesses: Vec::new(),
                });
            edge.weight += 1;
            edge.witnesses.extend(witnesses);
        }
    }
    CategoryGraph {
        nodes: seeds.categories().map(str::to_string).collect(),
        edges: edges.into_values().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seeds() -> SeedLexicon {
        SeedLexicon::default()
    }

    fn words(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    fn summary(topic: usize, top: &[&str], mass: &[(&str, f64)]) -> TopicSummary {
        let top_words: Vec<TopWord> = top
            .iter()
            .enumerate()
            .map(|(i, w)| TopWord {
                id: i as u32,
                word: w.to_string(),
                weight: 1.0 / (i + 1) as f64,
            })
            .collect();
        let (label, seed_hits) = label_topic(top, &seeds());
        TopicSummary {
            topic,
            top_words,
            label,
            seed_hits,
            category_mass: mass.iter().map(|&(c, m)| (c.to_string(), m)).collect(),
        }
    }

    #[test]
    fn seed_matching_rules() {
        let t = SeedTerm::parse("diabet*");
        assert!(t.matches("diabetes", false));
        assert!(t.matches("diabetic", false));
        assert!(!t.matches("prediabetes", false));
        assert!(t.matches("prediabetes", true));
        assert!(t.matches("diabetesawareness", true));
        assert!(t.matches("#diabetes", false));
        let exact = SeedTerm::parse("overweight");
        assert!(exact.matches("overweight", true));
        assert!(!exact.matches("overweightness", true));
    }

    #[test]
    fn majority_label() {
        let mut top = words(&["diet", "dieting", "diets", "dietary", "dietitian", "dietplan"]);
        top.extend(words(&["food", "sugar", "eat", "meal"]));
        let (label, hits) = label_topic(&top, &seeds());
        assert_eq!(label, Label::Category("Diet".into()));
        assert_eq!(hits["Diet"], 6);
    }

    #[test]
    fn exactly_half_is_unlabeled() {
        let mut top = words(&["diet", "dieting", "diets", "dietary", "dietitian"]);
        top.extend(words(&["food", "sugar", "eat", "meal", "plate"]));
        let (label, hits) = label_topic(&top, &seeds());
        assert_eq!(label, Label::Unlabeled);
        assert_eq!(hits["Diet"], 5);
    }

    #[test]
    fn two_majorities_is_unlabeled() {
        let lex = SeedLexicon::parse("[Diet]\ndiet*\n[Diabetes]\ndiabet*\n", Path::new("s"), true).unwrap();
        // fused words hit both categories
        let top = words(&[
            "dietdiabetes", "diabetesdiet", "dietdiabetic", "diabeticdiet", "dietsdiabetes",
            "diabetesdiets", "diet", "diabetes", "x", "y",
        ]);
        let (label, hits) = label_topic(&top, &lex);
        assert_eq!((hits["Diet"], hits["Diabetes"]), (7, 7));
        assert_eq!(label, Label::Unlabeled);
    }

    #[test]
    fn attach_by_mass() {
        let s = summary(0, &["cancer", "diet", "risk"], &[("Obesity", 0.7), ("Diet", 0.3)]);
        assert_eq!(s.label, Label::Unlabeled);
        let out = attach_subtopics(&[s], &seeds(), 0.5).unwrap();
        assert_eq!(out["Obesity"], vec![SubTopic { topic: 0, name: "cancer".into() }]);
    }

    #[test]
    fn low_mass_goes_non_health() {
        let s = summary(
            3,
            &["movie", "night"],
            &[("Obesity", 0.3), ("Diet", 0.25), ("Exercise", 0.25), ("Diabetes", 0.2)],
        );
        let out = attach_subtopics(&[s], &seeds(), 0.5).unwrap();
        assert_eq!(out[NON_HEALTH][0].topic, 3);
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn missing_tags_fatal() {
        let s = summary(1, &["movie"], &[]);
        assert!(matches!(
            attach_subtopics(&[s], &seeds(), 0.5),
            Err(Error::MissingCategoryTags(1))
        ));
    }

    #[test]
    fn partition_of_topics() {
        let sums = vec![
            summary(0, &["diet", "diets", "food"], &[("Diet", 1.0)]),
            summary(1, &["cancer", "risk"], &[("Obesity", 0.9), ("Diet", 0.1)]),
            summary(2, &["movie", "night"], &[("Obesity", 0.4), ("Diet", 0.6)]),
        ];
        let attached = attach_subtopics(&sums, &seeds(), 0.7).unwrap();
        let a = assignments(&sums, &attached);
        let kinds: Vec<_> = a.iter().map(|x| (x.topic, x.kind)).collect();
        assert_eq!(
            kinds,
            [(0, AssignmentKind::Main), (1, AssignmentKind::Subtopic), (2, AssignmentKind::NonHealth)]
        );
    }

    #[test]
    fn graph_edges_and_witnesses() {
        let sums = vec![
            summary(0, &["cancer", "diabetes", "risk"], &[("Obesity", 0.8), ("Diet", 0.2)]),
            summary(1, &["exercise", "exercising", "diet"], &[("Exercise", 1.0)]),
            summary(2, &["exercise", "workout", "dieting"], &[("Exercise", 1.0)]),
        ];
        let attached = attach_subtopics(&sums, &seeds(), 0.5).unwrap();
        let a = assignments(&sums, &attached);
        let g = build_relationship_graph(&sums, &a, &seeds());
        let edge = |f: &str, t: &str| g.edges.iter().find(|e| e.from == f && e.to == t);
        assert_eq!(edge("Obesity", "Diabetes").unwrap().weight, 1);
        assert_eq!(edge("Exercise", "Diet").unwrap().weight, 2);
        assert_eq!(g.edges.len(), 2);
        for e in &g.edges {
            assert!(!e.witnesses.is_empty());
            assert_ne!(e.from, e.to);
        }
    }

    #[test]
    fn no_cross_seed_words_no_edges() {
        let sums = vec![summary(0, &["diet", "diets", "food"], &[("Diet", 1.0)])];
        let a = assignments(&sums, &BTreeMap::new());
        let g = build_relationship_graph(&sums, &a, &seeds());
        assert!(g.edges.is_empty());
        assert_eq!(g.nodes, ["Diabetes", "Diet", "Exercise", "Obesity"]);
    }

    #[test]
    fn seed_lexicon_must_cover_queries() {
        let lex = SeedLexicon::parse("[Diet]\ndiet*\n", Path::new("s"), true).unwrap();
        assert!(lex.check_covers(&QuerySet::default()).is_err());
        assert!(seeds().check_covers(&QuerySet::default()).is_ok());
    }
}
