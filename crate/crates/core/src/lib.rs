//! Negative-sentiment topic mining over health-related tweets.
//!
//! The crate is organized as one module per pipeline stage:
//!
//! * [`corpus`]: ingestion, tokenization, stop words, query tagging, vocabulary
//! * [`sentiment`]: lexicon scoring and the negative-subset filter
//! * [`lda`]: collapsed Gibbs sampling for latent Dirichlet allocation
//! * [`model_selection`]: 80/20 split, left-to-right held-out likelihood, K sweep
//! * [`labeling`]: seed-category topic labels, sub-topics and the category graph
//! * [`pipeline`]: staged, resumable orchestration used by the `ddeo` binary

pub mod corpus;
pub mod error;
pub mod labeling;
pub mod lda;
pub mod model_selection;
pub mod pipeline;
pub mod rng;
pub mod sentiment;

pub use error::{Error, ErrorKind, Result};
