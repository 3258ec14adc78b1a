//! A dataset, its mined patterns, and their feature vectors.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::baseline::{baseline_features, NGramVocabulary};
use crate::embed::{encode_set_pattern, EmbeddingModel, EmbeddingParams, WalkCorpus};
use crate::error::{Error, Result};
use crate::model::{validate_dataset, Dataset, FeatureVector, Pattern, PatternKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeaturizerKind {
    /// Bag-of-items for itemsets, paragraph vectors for sequences and graphs.
    #[default]
    Native,
    /// 2-gram and 3-gram presence (sequences only).
    NGram,
    /// Twenty structural measures (graphs only).
    Topological,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub featurizer: FeaturizerKind,
    pub embedding: EmbeddingParams,
    /// Rescale dense features (embeddings, topological measures) to zero mean
    /// and unit variance per dimension over the pattern pool. Raw paragraph
    /// vectors are short enough that a unit-weight penalty flattens them.
    pub standardize: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            featurizer: FeaturizerKind::Native,
            embedding: EmbeddingParams::default(),
            standardize: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Workspace {
    dataset: Dataset,
    patterns: Vec<Pattern>,
    position: BTreeMap<usize, usize>,
}

impl Workspace {
    /// Checks the dataset invariants, that every pattern has the dataset's
    /// kind, and that pattern ids are unique.
    pub fn new(dataset: Dataset, patterns: Vec<Pattern>) -> Result<Self> {
        let violations = validate_dataset(&dataset);
        if !violations.is_empty() {
            return Err(Error::invalid(format!(
                "invalid dataset: {}",
                violations.join("; ")
            )));
        }
        if patterns.is_empty() {
            return Err(Error::Empty("no patterns"));
        }
        let mut position = BTreeMap::new();
        for (i, p) in patterns.iter().enumerate() {
            if p.kind() != dataset.kind {
                return Err(Error::KindMismatch {
                    pattern: p.kind(),
                    transaction: dataset.kind,
                });
            }
            if position.insert(p.id, i).is_some() {
                return Err(Error::invalid(format!("duplicate pattern id {}", p.id)));
            }
        }
        Ok(Workspace {
            dataset,
            patterns,
            position,
        })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    pub fn kind(&self) -> PatternKind {
        self.dataset.kind
    }

    /// Position of the pattern with `id` in [`Workspace::patterns`].
    pub fn position_of(&self, id: usize) -> Option<usize> {
        self.position.get(&id).copied()
    }

    /// Feature vectors for every pattern, index-aligned with `patterns()`.
    pub fn featurize(&self, config: &FeatureConfig) -> Result<FeatureTable> {
        let mut table = self.raw_features(config)?;
        if config.standardize {
            table.standardize();
        }
        Ok(table)
    }

    fn raw_features(&self, config: &FeatureConfig) -> Result<FeatureTable> {
        let kind = self.kind();
        match (config.featurizer, kind) {
            (FeaturizerKind::Native, PatternKind::Set) => {
                let universe = self.dataset.item_universe();
                let vectors = self
                    .patterns
                    .iter()
                    .map(|p| encode_set_pattern(p, &universe))
                    .collect::<Result<Vec<_>>>()?;
                Ok(FeatureTable::plain(vectors))
            }
            (FeaturizerKind::Native, _) => {
                let corpus = WalkCorpus::from_dataset(&self.dataset)?;
                let model = EmbeddingModel::train(&corpus, config.embedding.clone())?;
                let mut vectors = Vec::with_capacity(self.patterns.len());
                let mut unknown = Vec::with_capacity(self.patterns.len());
                for p in &self.patterns {
                    let inferred = model.infer_pattern(p, &self.dataset.vocab)?;
                    vectors.push(inferred.vector);
                    unknown.push(inferred.all_unknown);
                }
                Ok(FeatureTable {
                    vectors,
                    all_unknown: unknown,
                    embedding: Some(model),
                })
            }
            (FeaturizerKind::NGram, PatternKind::Sequence) => {
                let grams = NGramVocabulary::from_dataset(&self.dataset)?;
                let vectors = self
                    .patterns
                    .iter()
                    .map(|p| baseline_features(p, Some(&grams)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(FeatureTable::plain(vectors))
            }
            (FeaturizerKind::Topological, PatternKind::Graph) => {
                let vectors = self
                    .patterns
                    .iter()
                    .map(|p| baseline_features(p, None))
                    .collect::<Result<Vec<_>>>()?;
                Ok(FeatureTable::plain(vectors))
            }
            (f, k) => Err(Error::invalid(format!(
                "featurizer {f:?} does not apply to {k} patterns"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FeatureTable {
    pub vectors: Vec<FeatureVector>,
    /// Patterns whose tokens were all unknown to the embedding model.
    pub all_unknown: Vec<bool>,
    pub embedding: Option<EmbeddingModel>,
}

impl FeatureTable {
    fn plain(vectors: Vec<FeatureVector>) -> Self {
        FeatureTable {
            all_unknown: vec![false; vectors.len()],
            vectors,
            embedding: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, FeatureVector::dim)
    }

    /// Z-scores each dense dimension using the rows with known tokens;
    /// constant dimensions become 0 and all-unknown rows stay zero. Sparse
    /// tables are left alone.
    fn standardize(&mut self) {
        if self.vectors.iter().any(FeatureVector::is_sparse) {
            return;
        }
        let dim = self.dim();
        let known: Vec<usize> = (0..self.vectors.len())
            .filter(|&i| !self.all_unknown[i])
            .collect();
        if known.is_empty() {
            return;
        }
        let mut rows: Vec<Vec<f64>> = self.vectors.iter().map(FeatureVector::to_dense).collect();
        let n = known.len() as f64;
        #[allow(clippy::needless_range_loop)]
        for k in 0..dim {
            let mean = known.iter().map(|&i| rows[i][k]).sum::<f64>() / n;
            let var = known
                .iter()
                .map(|&i| (rows[i][k] - mean).powi(2))
                .sum::<f64>()
                / n;
            let sd = var.sqrt();
            for &i in &known {
                rows[i][k] = if sd > 1e-12 {
                    (rows[i][k] - mean) / sd
                } else {
                    0.0
                };
            }
        }
        self.vectors = rows.into_iter().map(FeatureVector::dense).collect();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardize_skips_unknown_rows_and_constant_columns() {
        let mut table = FeatureTable {
            vectors: vec![
                FeatureVector::dense(vec![1.0, 5.0]),
                FeatureVector::dense(vec![3.0, 5.0]),
                FeatureVector::dense(vec![0.0, 0.0]),
            ],
            all_unknown: vec![false, false, true],
            embedding: None,
        };
        table.standardize();
        assert_eq!(table.vectors[0].to_dense(), vec![-1.0, 0.0]);
        assert_eq!(table.vectors[1].to_dense(), vec![1.0, 0.0]);
        assert_eq!(table.vectors[2].to_dense(), vec![0.0, 0.0]);
    }
}
