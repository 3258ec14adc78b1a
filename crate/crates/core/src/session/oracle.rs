//! Simulated raters standing in for a human user.

use std::collections::BTreeSet;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{payload_contains, Dataset, Pattern, Payload};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContainmentBasis {
    /// Share of the pattern's items that are in the feature set.
    #[default]
    PatternFraction,
    /// Share of the feature set covered by the pattern.
    SetFraction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum OracleSpec {
    /// Rates a pattern with the most common class among the transactions
    /// containing it; ties go to the smallest class.
    MajorityClass,
    /// Rates 1 (interesting) when enough of the pattern's distinct tokens are
    /// in `features`, 2 otherwise.
    FeatureContainment {
        features: Vec<String>,
        #[serde(default = "default_threshold")]
        threshold: f64,
        #[serde(default)]
        basis: ContainmentBasis,
    },
}

fn default_threshold() -> f64 {
    0.8
}

impl OracleSpec {
    pub fn features(features: Vec<String>) -> Self {
        OracleSpec::FeatureContainment {
            features,
            threshold: default_threshold(),
            basis: ContainmentBasis::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let OracleSpec::FeatureContainment {
            features,
            threshold,
            ..
        } = self
        {
            if features.is_empty() {
                return Err(Error::invalid(
                    "feature containment needs a non-empty feature set",
                ));
            }
            if !(*threshold > 0.0 && *threshold <= 1.0) {
                return Err(Error::invalid(format!(
                    "threshold must be in (0, 1], got {threshold}"
                )));
            }
        }
        Ok(())
    }

    /// Number of rating levels the oracle produces on `dataset`.
    pub fn class_count(&self, dataset: &Dataset) -> Result<u32> {
        match self {
            OracleSpec::MajorityClass => dataset.class_count().map(|c| c.max(2)).ok_or_else(|| {
                Error::invalid("majority-class oracle needs a class-labeled dataset")
            }),
            OracleSpec::FeatureContainment { .. } => Ok(2),
        }
    }
}

/// Rates one pattern by scanning the dataset. [`Oracle`] is the indexed
/// equivalent for repeated use.
pub fn oracle_rate(oracle: &OracleSpec, pattern: &Pattern, dataset: &Dataset) -> Result<u32> {
    Oracle::prepare(oracle, dataset)?.rate(pattern, dataset)
}

/// An oracle with its lookup structures built for one dataset.
#[derive(Debug, Clone)]
pub struct Oracle {
    spec: OracleSpec,
    classes: u32,
    /// Per-token transaction bitsets, for itemset datasets.
    item_tidsets: Vec<FixedBitSet>,
    /// Per-class transaction bitsets (index 0 is class 1).
    class_tidsets: Vec<FixedBitSet>,
    features: BTreeSet<String>,
}

impl Oracle {
    pub fn prepare(spec: &OracleSpec, dataset: &Dataset) -> Result<Self> {
        spec.validate()?;
        let classes = spec.class_count(dataset)?;
        let n = dataset.len();
        let mut item_tidsets = Vec::new();
        let mut class_tidsets = Vec::new();
        if let OracleSpec::MajorityClass = spec {
            let labels = dataset
                .class_labels
                .as_ref()
                .expect("checked by class_count");
            class_tidsets = vec![FixedBitSet::with_capacity(n); classes as usize];
            for (i, &label) in labels.iter().enumerate() {
                if label == 0 || label > classes {
                    return Err(Error::invalid(format!(
                        "transaction {i} has class label {label}"
                    )));
                }
                class_tidsets[label as usize - 1].insert(i);
            }
            if dataset.kind == crate::model::PatternKind::Set {
                item_tidsets = vec![FixedBitSet::with_capacity(n); dataset.vocab.len()];
                for (i, t) in dataset.transactions.iter().enumerate() {
                    if let Payload::ItemSet(items) = &t.payload {
                        for &item in items {
                            item_tidsets[item as usize].insert(i);
                        }
                    }
                }
            }
        }
        let features = match spec {
            OracleSpec::FeatureContainment { features, .. } => features.iter().cloned().collect(),
            OracleSpec::MajorityClass => BTreeSet::new(),
        };
        Ok(Oracle {
            spec: spec.clone(),
            classes,
            item_tidsets,
            class_tidsets,
            features,
        })
    }

    pub fn spec(&self) -> &OracleSpec {
        &self.spec
    }

    pub fn class_count(&self) -> u32 {
        self.classes
    }

    /// Positions of the transactions that contain `pattern`.
    fn supporting(&self, pattern: &Pattern, dataset: &Dataset) -> Result<FixedBitSet> {
        let n = dataset.len();
        if let (Payload::ItemSet(items), false) = (&pattern.payload, self.item_tidsets.is_empty()) {
            let mut acc = FixedBitSet::with_capacity(n);
            acc.insert_range(..);
            for &item in items {
                match self.item_tidsets.get(item as usize) {
                    Some(tids) => acc.intersect_with(tids),
                    None => return Ok(FixedBitSet::with_capacity(n)),
                }
            }
            return Ok(acc);
        }
        let mut acc = FixedBitSet::with_capacity(n);
        for (i, t) in dataset.transactions.iter().enumerate() {
            if payload_contains(&pattern.payload, &t.payload)? {
                acc.insert(i);
            }
        }
        Ok(acc)
    }

    pub fn rate(&self, pattern: &Pattern, dataset: &Dataset) -> Result<u32> {
        match &self.spec {
            OracleSpec::MajorityClass => {
                let support = self.supporting(pattern, dataset)?;
                let counts: Vec<usize> = self
                    .class_tidsets
                    .iter()
                    .map(|class| support.intersection_count(class))
                    .collect();
                if counts.iter().all(|&c| c == 0) {
                    return Err(Error::Unsupported(pattern.id));
                }
                let mut best = 0;
                for (j, &c) in counts.iter().enumerate() {
                    if c > counts[best] {
                        best = j;
                    }
                }
                Ok(best as u32 + 1)
            }
            OracleSpec::FeatureContainment {
                threshold, basis, ..
            } => {
                let tokens: BTreeSet<&str> = pattern
                    .payload
                    .distinct_tokens()
                    .into_iter()
                    .map(|t| dataset.vocab.name(t))
                    .collect();
                let hits = tokens
                    .iter()
                    .filter(|t| self.features.contains(**t))
                    .count();
                let denominator = match basis {
                    ContainmentBasis::PatternFraction => tokens.len(),
                    ContainmentBasis::SetFraction => self.features.len(),
                };
                let fraction = if denominator == 0 {
                    0.0
                } else {
                    hits as f64 / denominator as f64
                };
                // tolerance keeps 4/5 >= 0.8 exact
                Ok(if fraction + 1e-12 >= *threshold { 1 } else { 2 })
            }
        }
    }
}
