//! Lexicon-based polarity scoring.
//!
//! A lexicon is two disjoint term lists. A term ending in `*` matches any token
//! that starts with the stem; any other term matches exactly. A document is
//! Negative when it has at least one negative hit and strictly more negative
//! than positive hits.

use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{read_to_string, CleanDocument};
use crate::error::{Error, Result};

pub const DEFAULT_POSITIVE: &str = include_str!("../data/positive.txt");
pub const DEFAULT_NEGATIVE: &str = include_str!("../data/negative.txt");

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TermSet {
    literals: HashSet<String>,
    prefixes: HashSet<String>,
    // distinct stem lengths in bytes, ascending
    prefix_lens: Vec<usize>,
}

impl TermSet {
    pub fn parse(text: &str) -> Self {
        let mut set = TermSet::default();
        for line in text.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            set.insert(&line.to_lowercase());
        }
        set
    }

    pub fn insert(&mut self, term: &str) {
        match term.strip_suffix('*') {
            Some(stem) if !stem.is_empty() => {
                if self.prefixes.insert(stem.to_string()) && !self.prefix_lens.contains(&stem.len()) {
                    self.prefix_lens.push(stem.len());
                    self.prefix_lens.sort_unstable();
                }
            }
            _ => {
                self.literals.insert(term.to_string());
            }
        }
    }

    pub fn len(&self) -> usize {
        self.literals.len() + self.prefixes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn matches(&self, token: &str) -> bool {
        if self.literals.contains(token) {
            return true;
        }
        for &n in &self.prefix_lens {
            if n > token.len() {
                break;
            }
            if token.is_char_boundary(n) && self.prefixes.contains(&token[..n]) {
                return true;
            }
        }
        false
    }

    /// Non-wildcard terms, sorted.
    pub fn literals(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.literals.iter().map(String::as_str).collect();
        v.sort_unstable();
        v
    }

    /// Terms in display form (`stem*` for wildcards), sorted.
    pub fn terms(&self) -> BTreeSet<String> {
        self.literals
            .iter()
            .cloned()
            .chain(self.prefixes.iter().map(|p| format!("{p}*")))
            .collect()
    }

    /// First term of `self` that can match a token also matched by `other`.
    fn conflict_with(&self, other: &TermSet) -> Option<(String, String)> {
        let mine = self.terms();
        for term in &mine {
            if let Some(stem) = term.strip_suffix('*') {
                if let Some(lit) = other.literals.iter().filter(|l| l.starts_with(stem)).min() {
                    return Some((term.clone(), lit.clone()));
                }
                if let Some(p) = other
                    .prefixes
                    .iter()
                    .filter(|p| p.starts_with(stem) || stem.starts_with(p.as_str()))
                    .min()
                {
                    return Some((term.clone(), format!("{p}*")));
                }
            } else if other.matches(term) {
                let hit = other
                    .terms()
                    .into_iter()
                    .find(|t| match t.strip_suffix('*') {
                        Some(stem) => term.starts_with(stem),
                        None => t == term,
                    })
                    .unwrap_or_default();
                return Some((term.clone(), hit));
            }
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentimentLexicon {
    positive: TermSet,
    negative: TermSet,
}

impl SentimentLexicon {
    pub fn new(positive: TermSet, negative: TermSet) -> Result<Self> {
        if negative.is_empty() {
            return Err(Error::EmptyNegativeLexicon);
        }
        if let Some((term, other)) = positive.conflict_with(&negative) {
            return Err(Error::LexiconOverlap { term, other });
        }
        Ok(Self { positive, negative })
    }

    pub fn parse(positive: &str, negative: &str) -> Result<Self> {
        Self::new(TermSet::parse(positive), TermSet::parse(negative))
    }

    pub fn positive(&self) -> &TermSet {
        &self.positive
    }

    pub fn negative(&self) -> &TermSet {
        &self.negative
    }
}

impl Default for SentimentLexicon {
    fn default() -> Self {
        Self::parse(DEFAULT_POSITIVE, DEFAULT_NEGATIVE).expect("builtin lexicon is consistent")
    }
}

pub fn load_lexicon(pos_path: &Path, neg_path: &Path) -> Result<SentimentLexicon> {
    SentimentLexicon::parse(&read_to_string(pos_path)?, &read_to_string(neg_path)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarity {
    Negative,
    NonNegative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentimentScore {
    pub pos_count: u32,
    pub neg_count: u32,
    pub polarity: Polarity,
}

impl SentimentScore {
    pub fn from_counts(pos_count: u32, neg_count: u32) -> Self {
        let polarity = if neg_count >= 1 && neg_count > pos_count {
            Polarity::Negative
        } else {
            Polarity::NonNegative
        };
        Self {
            pos_count,
            neg_count,
            polarity,
        }
    }

    pub fn is_negative(&self) -> bool {
        self.polarity == Polarity::Negative
    }
}

/// Counts lexicon hits, one per matching token occurrence.
pub fn score_document<S: AsRef<str>>(tokens: &[S], lexicon: &SentimentLexicon) -> SentimentScore {
    let (mut pos, mut neg) = (0u32, 0u32);
    for t in tokens {
        let t = t.as_ref();
        if lexicon.negative.matches(t) {
            neg += 1;
        } else if lexicon.positive.matches(t) {
            pos += 1;
        }
    }
    SentimentScore::from_counts(pos, neg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegativeStats {
    pub total: usize,
    pub negative: usize,
    pub fraction: f64,
}

/// Keeps the Negative documents, in input order.
pub fn filter_negative(
    docs: Vec<CleanDocument>,
    lexicon: &SentimentLexicon,
) -> (Vec<CleanDocument>, NegativeStats) {
    let keep: Vec<bool> = docs
        .par_iter()
        .map(|d| score_document(&d.tokens, lexicon).is_negative())
        .collect();
    let total = docs.len();
    let negative_docs: Vec<CleanDocument> = docs
        .into_iter()
        .zip(keep)
        .filter_map(|(d, k)| k.then_some(d))
        .collect();
    let negative = negative_docs.len();
    let fraction = if total == 0 {
        0.0
    } else {
        negative as f64 / total as f64
    };
    (
        negative_docs,
        NegativeStats {
            total,
            negative,
            fraction,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex(pos: &str, neg: &str) -> SentimentLexicon {
        SentimentLexicon::parse(pos, neg).unwrap()
    }

    fn doc(id: usize, words: &[&str]) -> CleanDocument {
        CleanDocument {
            id: id.to_string(),
            tokens: words.iter().map(|s| s.to_string()).collect(),
            categories: Default::default(),
        }
    }

    #[test]
    fn load_examples() {
        let l = lex("love", "hate\npiss*");
        assert_eq!(l.negative().len(), 2);
        assert_eq!(l.positive().len(), 1);

        let err = SentimentLexicon::parse("bad", "bad").unwrap_err();
        assert!(matches!(err, Error::LexiconOverlap { ref term, .. } if term == "bad"));

        assert_eq!(lex("", "sad\nsad").negative().len(), 1);
    }

    #[test]
    fn wildcard_overlaps_rejected() {
        assert!(SentimentLexicon::parse("pissed", "piss*").is_err());
        assert!(SentimentLexicon::parse("piss*", "pissed").is_err());
        assert!(SentimentLexicon::parse("pi*", "piss*").is_err());
        assert!(SentimentLexicon::parse("piss*", "pi*").is_err());
        assert!(SentimentLexicon::parse("pie", "piss*").is_ok());
    }

    #[test]
    fn empty_negative_rejected() {
        assert!(matches!(
            SentimentLexicon::parse("good", "# nothing\n"),
            Err(Error::EmptyNegativeLexicon)
        ));
    }

    #[test]
    fn builtin_lexicon_loads() {
        let l = SentimentLexicon::default();
        assert!(l.negative().matches("pissed"));
        assert!(l.negative().matches("feeling"));
        assert!(l.positive().matches("happy"));
    }

    #[test]
    fn score_examples() {
        let l = lex("good", "hate\nbad\npiss*");
        assert_eq!(score_document(&["hate", "diet"], &l), SentimentScore::from_counts(0, 1));
        assert!(score_document(&["hate", "diet"], &l).is_negative());
        let s = score_document(&["pissed", "off"], &l);
        assert_eq!((s.pos_count, s.neg_count, s.polarity), (0, 1, Polarity::Negative));
        let s = score_document(&["good", "bad"], &l);
        assert_eq!((s.pos_count, s.neg_count, s.polarity), (1, 1, Polarity::NonNegative));
        let s = score_document::<&str>(&[], &l);
        assert_eq!((s.pos_count, s.neg_count, s.polarity), (0, 0, Polarity::NonNegative));
    }

    #[test]
    fn literal_and_prefix_same_polarity_count_once() {
        let l = lex("", "pissed\npiss*");
        assert_eq!(score_document(&["pissed", "pissed"], &l).neg_count, 2);
    }

    #[test]
    fn filter_preserves_order_and_stats() {
        let l = lex("good", "bad");
        let docs = vec![
            doc(0, &["bad"]),
            doc(1, &["good"]),
            doc(2, &["bad", "bad", "good"]),
            doc(3, &[]),
        ];
        let (neg, stats) = filter_negative(docs, &l);
        let ids: Vec<_> = neg.iter().map(|d| d.id.as_str()).collect();
        assert_eq!(ids, ["0", "2"]);
        assert_eq!(stats, NegativeStats { total: 4, negative: 2, fraction: 0.5 });
    }

    #[test]
    fn filter_all_empty() {
        let l = lex("good", "bad");
        let (neg, stats) = filter_negative(vec![doc(0, &[]), doc(1, &[])], &l);
        assert!(neg.is_empty());
        assert_eq!(stats.negative, 0);
        let (_, stats) = filter_negative(vec![], &l);
        assert_eq!(stats.fraction, 0.0);
    }

    #[test]
    fn multibyte_prefix_boundaries() {
        let l = lex("", "é*");
        assert!(l.negative().matches("été"));
        assert!(!l.negative().matches("e"));
    }
}
