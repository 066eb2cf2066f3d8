//! Ingestion and cleaning of tweet records.
//!
//! Input is line-delimited JSON, one object per line with `id` and `text`
//! (required, strings) and optional `lang` and `created_at`. Cleaning runs
//! tokenize, then stop-word removal, then query-category tagging; the topic
//! model consumes the integer form produced by [`build_vocabulary`].

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::sha256_hex;

pub const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");
pub const DEFAULT_QUERIES: &str = include_str!("../data/queries.txt");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TokenizerRules {
    pub lowercase: bool,
    pub strip_urls: bool,
    pub strip_mentions: bool,
    /// Drop the leading `#` of a hashtag and keep the word.
    pub fold_hashtags: bool,
    /// Minimum token length in characters.
    pub min_token_len: usize,
}

impl Default for TokenizerRules {
    fn default() -> Self {
        Self {
            lowercase: true,
            strip_urls: true,
            strip_mentions: true,
            fold_hashtags: true,
            min_token_len: 2,
        }
    }
}

impl TokenizerRules {
    pub fn validate(&self) -> Result<()> {
        if self.min_token_len == 0 {
            return Err(Error::InvalidParameter("min_token_len must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopWordList {
    words: HashSet<String>,
}

impl StopWordList {
    /// One word per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Self { words }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::parse(&read_to_string(path)?))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

pub fn default_stopwords() -> StopWordList {
    StopWordList::parse(DEFAULT_STOPWORDS)
}

/// Parses the `[Section]` / one-entry-per-line format shared by query sets and
/// seed lexicons. Entries are lowercased; section order is preserved.
pub fn parse_sections(text: &str, source: &Path) -> Result<Vec<(String, Vec<String>)>> {
    let mut sections: Vec<(String, Vec<String>)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').map(str::trim).unwrap_or("");
            if name.is_empty() {
                return Err(Error::Parse {
                    path: source.to_path_buf(),
                    line: lineno + 1,
                    message: format!("bad section header {line:?}"),
                });
            }
            if sections.iter().any(|(n, _)| n == name) {
                return Err(Error::Parse {
                    path: source.to_path_buf(),
                    line: lineno + 1,
                    message: format!("duplicate section {name:?}"),
                });
            }
            sections.push((name.to_string(), Vec::new()));
            continue;
        }
        // A bare '#word' is a hashtag term; comments need a following space.
        if line.starts_with("# ") || line == "#" {
            continue;
        }
        match sections.last_mut() {
            Some((_, terms)) => {
                let term = line.to_lowercase();
                if !terms.contains(&term) {
                    terms.push(term);
                }
            }
            None => {
                return Err(Error::Parse {
                    path: source.to_path_buf(),
                    line: lineno + 1,
                    message: "entry before any [Section] header".into(),
                })
            }
        }
    }
    Ok(sections)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuerySet {
    categories: BTreeMap<String, Vec<String>>,
}

impl QuerySet {
    pub fn new(categories: BTreeMap<String, Vec<String>>) -> Result<Self> {
        if categories.is_empty() {
            return Err(Error::InvalidParameter("query set has no categories".into()));
        }
        for (name, terms) in &categories {
            if terms.is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "query category {name:?} has no terms"
                )));
            }
        }
        Ok(Self { categories })
    }

    pub fn parse(text: &str, source: &Path) -> Result<Self> {
        Self::new(parse_sections(text, source)?.into_iter().collect())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_to_string(path)?, path)
    }

    pub fn categories(&self) -> impl Iterator<Item = &str> {
        self.categories.keys().map(String::as_str)
    }

    pub fn terms(&self, category: &str) -> Option<&[String]> {
        self.categories.get(category).map(Vec::as_slice)
    }
}

impl Default for QuerySet {
    /// The eight search terms over the four categories Diabetes, Diet,
    /// Exercise and Obesity.
    fn default() -> Self {
        Self::parse(DEFAULT_QUERIES, Path::new("<builtin queries>")).expect("builtin query set")
    }
}

/// A cleaned document still in word form: the output of tokenization,
/// stop-word removal and query tagging.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanDocument {
    pub id: String,
    pub tokens: Vec<String>,
    pub categories: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedDocument {
    pub id: String,
    pub tokens: Vec<u32>,
    pub categories: BTreeSet<String>,
}

/// Dense word <-> id mapping with corpus frequencies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    words: Vec<String>,
    freq: Vec<u64>,
    index: HashMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    words: Vec<String>,
    freq: Vec<u64>,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        Vocabulary::from_parts(r.words, r.freq)
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            words: v.words,
            freq: v.freq,
        }
    }
}

impl Vocabulary {
    pub fn from_parts(words: Vec<String>, freq: Vec<u64>) -> Self {
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        Self { words, freq, index }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: u32) -> Option<&str> {
        self.words.get(id as usize).map(String::as_str)
    }

    pub fn frequency(&self, id: u32) -> u64 {
        self.freq[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Content hash of the word list in id order. Models and held-out data
    /// carry it so mismatched vocabularies are caught.
    pub fn hash(&self) -> String {
        let mut buf = Vec::new();
        for w in &self.words {
            buf.extend_from_slice(w.as_bytes());
            buf.push(b'\n');
        }
        sha256_hex(&buf)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub lines: usize,
    pub malformed: usize,
    pub skipped_lang: usize,
    pub duplicate_ids: usize,
}

#[derive(Debug)]
pub struct Ingested {
    pub documents: Vec<RawDocument>,
    pub report: IngestReport,
}

/// Reads line-delimited JSON records from `path`.
///
/// Records whose `lang` is present and differs from `lang_filter` (compared on
/// the primary subtag, case-insensitively) are skipped. Malformed lines are
/// counted and skipped; more than half malformed is fatal. Duplicate ids keep
/// the first occurrence.
pub fn ingest(path: &Path, lang_filter: Option<&str>) -> Result<Ingested> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(file, path, lang_filter)
}

pub fn ingest_reader<R: Read>(reader: R, source: &Path, lang_filter: Option<&str>) -> Result<Ingested> {
    let mut lines = Vec::new();
    for line in BufReader::new(reader).lines() {
        let line = line.map_err(|e| Error::io(source, e))?;
        if !line.trim().is_empty() {
            lines.push(line);
        }
    }

    let parsed: Vec<Option<RawDocument>> = lines.par_iter().map(|l| parse_record(l)).collect();

    let mut report = IngestReport {
        lines: lines.len(),
        ..Default::default()
    };
    let mut seen = HashSet::new();
    let mut documents = Vec::with_capacity(parsed.len());
    for doc in parsed {
        let Some(doc) = doc else {
            report.malformed += 1;
            continue;
        };
        if let (Some(want), Some(lang)) = (lang_filter, doc.lang.as_deref()) {
            if !same_language(want, lang) {
                report.skipped_lang += 1;
                continue;
            }
        }
        if !seen.insert(doc.id.clone()) {
            report.duplicate_ids += 1;
            continue;
        }
        documents.push(doc);
    }

    if report.malformed * 2 > report.lines {
        return Err(Error::MostlyMalformed {
            path: source.to_path_buf(),
            malformed: report.malformed,
            lines: report.lines,
        });
    }
    Ok(Ingested { documents, report })
}

fn parse_record(line: &str) -> Option<RawDocument> {
    let doc: RawDocument = serde_json::from_str(line).ok()?;
    if doc.id.is_empty() {
        return None;
    }
    Some(doc)
}

fn same_language(want: &str, have: &str) -> bool {
    let primary = |s: &str| s.split(['-', '_']).next().unwrap_or("").to_ascii_lowercase();
    primary(want) == primary(have)
}

/// Splits `text` into word tokens.
///
/// Whitespace-separated chunks are scanned for runs of alphanumeric characters;
/// everything else is a boundary. Rules apply in the order URL stripping,
/// mention stripping, hashtag folding, lowercasing, minimum length.
pub fn tokenize(text: &str, rules: &TokenizerRules) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let chunk = if rules.strip_urls {
            match find_url(chunk) {
                Some(0) => continue,
                Some(at) => &chunk[..at],
                None => chunk,
            }
        } else {
            chunk
        };
        split_chunk(chunk, rules, &mut out);
    }
    out
}

fn find_url(chunk: &str) -> Option<usize> {
    let lower = chunk.to_ascii_lowercase();
    ["http://", "https://", "www."]
        .iter()
        .filter_map(|p| lower.find(p))
        .min()
}

fn split_chunk(chunk: &str, rules: &TokenizerRules, out: &mut Vec<String>) {
    let mut chars = chunk.char_indices().peekable();
    let mut prev: Option<char> = None;
    while let Some((start, c)) = chars.next() {
        let sigil = (c == '#' || c == '@')
            && !prev.is_some_and(char::is_alphanumeric)
            && chars.peek().is_some_and(|&(_, n)| n.is_alphanumeric());
        if !(c.is_alphanumeric() || sigil) {
            prev = Some(c);
            continue;
        }
        let mut end = start + c.len_utf8();
        while let Some(&(i, n)) = chars.peek() {
            if !n.is_alphanumeric() {
                break;
            }
            end = i + n.len_utf8();
            chars.next();
        }
        prev = chunk[..end].chars().next_back();
        let token = &chunk[start..end];
        if c == '@' && sigil && rules.strip_mentions {
            continue;
        }
        let token = if c == '#' && sigil && rules.fold_hashtags {
            &token[1..]
        } else {
            token
        };
        let token = if rules.lowercase {
            token.to_lowercase()
        } else {
            token.to_string()
        };
        if token.chars().count() >= rules.min_token_len {
            out.push(token);
        }
    }
}

/// Drops stop words, preserving the order of the survivors.
pub fn remove_stopwords(tokens: Vec<String>, stoplist: &StopWordList) -> Vec<String> {
    tokens.into_iter().filter(|t| !stoplist.contains(t)).collect()
}

/// Categories with at least one term present among `tokens`. A leading `#` on
/// either side is ignored, so `#diabetes` and `diabetes` match each other.
pub fn match_queries<S: AsRef<str>>(tokens: &[S], queries: &QuerySet) -> BTreeSet<String> {
    let bare = |s: &str| s.strip_prefix('#').unwrap_or(s).to_string();
    let present: HashSet<String> = tokens.iter().map(|t| bare(t.as_ref())).collect();
    queries
        .categories
        .iter()
        .filter(|(_, terms)| terms.iter().any(|t| present.contains(&bare(t))))
        .map(|(name, _)| name.clone())
        .collect()
}

/// Tokenize, remove stop words and tag one raw record.
pub fn clean_document(
    doc: &RawDocument,
    rules: &TokenizerRules,
    stoplist: &StopWordList,
    queries: &QuerySet,
) -> CleanDocument {
    let tokens = remove_stopwords(tokenize(&doc.text, rules), stoplist);
    let categories = match_queries(&tokens, queries);
    CleanDocument {
        id: doc.id.clone(),
        tokens,
        categories,
    }
}

pub fn clean_all(
    docs: &[RawDocument],
    rules: &TokenizerRules,
    stoplist: &StopWordList,
    queries: &QuerySet,
) -> Vec<CleanDocument> {
    docs.par_iter()
        .map(|d| clean_document(d, rules, stoplist, queries))
        .collect()
}

#[derive(Debug, Clone)]
pub struct VocabularyBuild {
    pub vocabulary: Vocabulary,
    pub documents: Vec<TokenizedDocument>,
    /// Documents dropped because no token survived pruning.
    pub dropped_empty: usize,
}

/// Assigns dense ids by descending corpus frequency (ties lexicographic),
/// dropping words seen fewer than `min_count` times and documents left empty.
pub fn build_vocabulary(docs: &[CleanDocument], min_count: u64) -> Result<VocabularyBuild> {
    if min_count == 0 {
        return Err(Error::InvalidParameter("min_count must be >= 1".into()));
    }
    let counts: HashMap<&str, u64> = docs
        .par_iter()
        .fold(HashMap::new, |mut acc: HashMap<&str, u64>, d| {
            for t in &d.tokens {
                *acc.entry(t.as_str()).or_default() += 1;
            }
            acc
        })
        .reduce(HashMap::new, |a, b| {
            if a.len() < b.len() {
                merge_counts(b, a)
            } else {
                merge_counts(a, b)
            }
        });

    let mut kept: Vec<(&str, u64)> = counts.into_iter().filter(|&(_, c)| c >= min_count).collect();
    kept.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let vocabulary = Vocabulary::from_parts(
        kept.iter().map(|(w, _)| w.to_string()).collect(),
        kept.iter().map(|&(_, c)| c).collect(),
    );

    let mapped: Vec<Option<TokenizedDocument>> = docs
        .par_iter()
        .map(|d| {
            let tokens: Vec<u32> = d.tokens.iter().filter_map(|t| vocabulary.id(t)).collect();
            (!tokens.is_empty()).then(|| TokenizedDocument {
                id: d.id.clone(),
                tokens,
                categories: d.categories.clone(),
            })
        })
        .collect();
    let dropped_empty = mapped.iter().filter(|d| d.is_none()).count();
    let documents: Vec<TokenizedDocument> = mapped.into_iter().flatten().collect();
    if documents.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(VocabularyBuild {
        vocabulary,
        documents,
        dropped_empty,
    })
}

fn merge_counts<'a>(mut a: HashMap<&'a str, u64>, b: HashMap<&'a str, u64>) -> HashMap<&'a str, u64> {
    for (k, v) in b {
        *a.entry(k).or_default() += v;
    }
    a
}

/// Maps integer documents back to words under `vocab`.
pub fn to_words(docs: &[TokenizedDocument], vocab: &Vocabulary) -> Vec<CleanDocument> {
    docs.iter()
        .map(|d| CleanDocument {
            id: d.id.clone(),
            tokens: d
                .tokens
                .iter()
                .map(|&t| vocab.word(t).expect("token id in vocabulary").to_string())
                .collect(),
            categories: d.categories.clone(),
        })
        .collect()
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(PathBuf::from(path), e))
}
