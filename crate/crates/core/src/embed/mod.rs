//! Metric embeddings of patterns.
//!
//! Itemsets become binary bag-of-items vectors over the item universe.
//! Sequences and graphs are turned into sentences (a sequence is its own
//! sentence; a graph yields one depth-first edge walk per vertex) and embedded
//! with a distributed-memory paragraph-vector model trained on the dataset.

mod paragraph;
mod persist;
mod walks;

pub use paragraph::{
    infer_pattern_vector, train_embedding, EmbeddingModel, EmbeddingParams, Inferred,
};
pub use walks::{graph_to_walks, walk_from, SentenceOrigin, WalkCorpus};

#[doc(hidden)]
pub use paragraph::{prediction_loss, sgd_prediction};

use crate::error::{Error, Result};
use crate::model::{FeatureVector, ItemUniverse, Pattern, Payload};

/// Binary vector with a one at the universe position of every pattern item.
pub fn encode_set_pattern(pattern: &Pattern, universe: &ItemUniverse) -> Result<FeatureVector> {
    let Payload::ItemSet(items) = &pattern.payload else {
        return Err(Error::invalid(format!(
            "bag-of-items encoding needs an itemset pattern, got a {}",
            pattern.kind()
        )));
    };
    let indices = items
        .iter()
        .map(|&t| {
            universe
                .position(t)
                .ok_or_else(|| Error::UnknownItem(format!("token id {t}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureVector::sparse(indices, universe.len()))
}
