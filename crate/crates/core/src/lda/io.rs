//! JSON model container.
//!
//! ```json
//! {
//!   "format": "ddeo-lda-model",
//!   "version": 1,
//!   "hyper": { "k": .., "alpha_sum": .., "beta": .., "iterations": .., "seed": .., "samples": .., "thinning": .. },
//!   "vocab_hash": "<sha256 of the vocabulary word list>",
//!   "vocab_size": V,
//!   "samples": S,
//!   "topic_word": [[[word, count], ...], ...],   // K rows, non-zero cells only
//!   "doc_topic": [[count, ...], ...]             // D rows of K, optional
//! }
//! ```
//!
//! Counts are summed over the `samples` averaged chain states; phi and theta
//! are recomputed from them on load, so a round trip is exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Hyperparams, TopicModel};
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "ddeo-lda-model";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub hyper: Hyperparams,
    pub vocab_hash: String,
    pub vocab_size: usize,
    pub samples: u32,
    pub topic_word: Vec<Vec<(u32, u64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc_topic: Option<Vec<Vec<u64>>>,
}

impl TopicModel {
    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            hyper: self.hyper,
            vocab_hash: self.vocab_hash.clone(),
            vocab_size: self.vocab_size,
            samples: self.samples,
            topic_word: self.topic_word.clone(),
            doc_topic: Some(self.doc_topic.clone()),
        }
    }

    pub fn from_file(file: ModelFile) -> Result<Self> {
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported model format {} v{}",
                file.format, file.version
            )));
        }
        TopicModel::from_counts(
            file.hyper,
            file.vocab_hash,
            file.vocab_size,
            file.samples,
            file.topic_word,
            file.doc_topic.unwrap_or_default(),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("model serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ModelFile = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_file(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lda::{train_with, CountLayout};

    #[test]
    fn round_trip_is_exact() {
        let docs = vec![vec![0u32, 1, 2], vec![2, 2, 3], vec![1, 0]];
        let hyper = Hyperparams {
            k: 2,
            iterations: 30,
            seed: 5,
            ..Default::default()
        };
        let m = train_with(&docs, 4, "abc".into(), &hyper, CountLayout::Auto).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        m.save(&path).unwrap();
        let back = TopicModel::load(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json(), m.to_json());
    }

    #[test]
    fn rejects_unknown_format() {
        let docs = vec![vec![0u32]];
        let m = train_with(&docs, 1, "x".into(), &Hyperparams { k: 1, iterations: 1, ..Default::default() }, CountLayout::Auto).unwrap();
        let mut f = m.to_file();
        f.format = "other".into();
        assert!(TopicModel::from_file(f).is_err());
    }
}
