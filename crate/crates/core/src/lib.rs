//! Interactive personalized pattern discovery.
//!
//! A user rates a handful of mined patterns per iteration; a softmax model
//! learns their interestingness function and recommends matching patterns.
//!
//! - [`model`]: transactions, patterns, feature vectors, containment;
//! - [`io`]: dataset and pattern file formats;
//! - [`miner`]: closed itemset mining, pattern ingestion, batching;
//! - [`embed`]: set encoding, graph walks, paragraph-vector embeddings;
//! - [`learner`]: softmax regression, training, weighted F-score;
//! - [`select`]: expected gradient length and greedy k-center selection;
//! - [`session`]: the interactive loop, oracles, reports, ablations.

pub mod embed;
pub mod error;
pub mod io;
pub mod learner;
pub mod miner;
pub mod model;
pub mod select;
pub mod session;
pub mod synthetic;

pub use error::{Error, Result};
