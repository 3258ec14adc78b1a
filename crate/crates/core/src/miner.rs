//! Closed frequent pattern production.
//!
//! Itemsets are mined natively with prefix-preserving closure extension over
//! vertical bitset occurrence lists. Sequence and graph patterns come from
//! external miners and are ingested from pattern files, with supports
//! re-verified against the dataset.

use std::path::Path;

use fixedbitset::FixedBitSet;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::parse_pattern_file;
use crate::model::{payload_contains, Dataset, Pattern, PatternKind, Payload, TokenId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiningConfig {
    pub min_support: usize,
    pub batch_fraction: f64,
    pub shuffle_seed: u64,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            min_support: 1,
            batch_fraction: 0.02,
            shuffle_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternBatch {
    pub index: usize,
    pub patterns: Vec<Pattern>,
}

/// All closed frequent itemsets with support `>= min_support`, sorted by
/// support descending and then by item ids; pattern ids follow that order.
pub fn mine_closed_itemsets(dataset: &Dataset, min_support: usize) -> Result<Vec<Pattern>> {
    if dataset.kind != PatternKind::Set {
        return Err(Error::KindMismatch {
            pattern: PatternKind::Set,
            transaction: dataset.kind,
        });
    }
    if dataset.is_empty() {
        return Err(Error::Empty("cannot mine an empty dataset"));
    }
    if min_support == 0 {
        return Err(Error::invalid("min_support must be at least 1"));
    }
    let n = dataset.len();
    if min_support > n {
        return Ok(Vec::new());
    }

    let mut occurrences = vec![FixedBitSet::with_capacity(n); dataset.vocab.len()];
    for (tid, t) in dataset.transactions.iter().enumerate() {
        let Payload::ItemSet(items) = &t.payload else {
            return Err(Error::KindMismatch {
                pattern: PatternKind::Set,
                transaction: t.payload.kind(),
            });
        };
        for &item in items {
            let slot = occurrences
                .get_mut(item as usize)
                .ok_or_else(|| Error::invalid(format!("item id {item} outside the vocabulary")))?;
            slot.insert(tid);
        }
    }

    let frequent: Vec<(TokenId, FixedBitSet)> = occurrences
        .into_iter()
        .enumerate()
        .filter(|(_, occ)| occ.count_ones(..) >= min_support)
        .map(|(item, occ)| (item as TokenId, occ))
        .collect();

    let mut miner = ClosedMiner {
        frequent: &frequent,
        min_support,
        found: Vec::new(),
    };

    let mut all = FixedBitSet::with_capacity(n);
    all.insert_range(..);
    let root: Vec<usize> = (0..frequent.len())
        .filter(|&i| frequent[i].1.count_ones(..) == n)
        .collect();
    if !root.is_empty() {
        miner.found.push((root.clone(), n));
    }
    miner.expand(&root, &all, None);

    let mut patterns: Vec<(Vec<TokenId>, usize)> = miner
        .found
        .into_iter()
        .map(|(local, support)| (local.into_iter().map(|i| frequent[i].0).collect(), support))
        .collect();
    for (items, _) in &mut patterns {
        items.sort_unstable();
    }
    patterns.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    Ok(patterns
        .into_iter()
        .enumerate()
        .map(|(id, (items, support))| Pattern {
            id,
            payload: Payload::ItemSet(items),
            support,
            supporting_ids: None,
        })
        .collect())
}

struct ClosedMiner<'a> {
    frequent: &'a [(TokenId, FixedBitSet)],
    min_support: usize,
    /// Closed itemsets as indices into `frequent` (ascending), with support.
    found: Vec<(Vec<usize>, usize)>,
}

impl ClosedMiner<'_> {
    fn expand(&mut self, itemset: &[usize], occurrence: &FixedBitSet, core: Option<usize>) {
        let start = core.map_or(0, |c| c + 1);
        for e in start..self.frequent.len() {
            if itemset.binary_search(&e).is_ok() {
                continue;
            }
            let mut extended = occurrence.clone();
            extended.intersect_with(&self.frequent[e].1);
            let support = extended.count_ones(..);
            if support < self.min_support {
                continue;
            }
            // Prefix preservation: the closure may not add any item below e.
            let breaks_prefix = (0..e)
                .filter(|i| itemset.binary_search(i).is_err())
                .any(|i| extended.is_subset(&self.frequent[i].1));
            if breaks_prefix {
                continue;
            }
            let mut closed: Vec<usize> = itemset.to_vec();
            closed.push(e);
            closed.extend(
                (e + 1..self.frequent.len())
                    .filter(|i| itemset.binary_search(i).is_err())
                    .filter(|&i| extended.is_subset(&self.frequent[i].1)),
            );
            closed.sort_unstable();
            self.found.push((closed.clone(), support));
            self.expand(&closed, &extended, Some(e));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportMismatch {
    pub pattern_id: usize,
    pub line: usize,
    pub declared: usize,
    pub recomputed: usize,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub patterns: Vec<Pattern>,
    pub warnings: Vec<SupportMismatch>,
}

pub fn ingest_patterns(
    path: impl AsRef<Path>,
    kind: PatternKind,
    dataset: &Dataset,
) -> Result<Ingested> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    ingest_pattern_text(&text, kind, dataset, &path.display().to_string())
}

/// Parses externally mined patterns and re-counts each support against the
/// dataset. Declared supports are kept; disagreements become warnings.
pub fn ingest_pattern_text(
    text: &str,
    kind: PatternKind,
    dataset: &Dataset,
    source: &str,
) -> Result<Ingested> {
    if kind != dataset.kind {
        return Err(Error::KindMismatch {
            pattern: kind,
            transaction: dataset.kind,
        });
    }
    let raw = parse_pattern_file(text, kind, &dataset.vocab, source)?;
    let mut patterns = Vec::with_capacity(raw.len());
    let mut warnings = Vec::new();
    for (id, r) in raw.into_iter().enumerate() {
        let mut supporting = Vec::new();
        for t in &dataset.transactions {
            if payload_contains(&r.payload, &t.payload)? {
                supporting.push(t.id);
            }
        }
        let matches = supporting.len() == r.support;
        if !matches {
            warnings.push(SupportMismatch {
                pattern_id: id,
                line: r.line,
                declared: r.support,
                recomputed: supporting.len(),
            });
        }
        patterns.push(Pattern {
            id,
            payload: r.payload,
            support: r.support,
            supporting_ids: matches.then_some(supporting),
        });
    }
    Ok(Ingested { patterns, warnings })
}

/// `ceil(fraction * n)` with a small tolerance so that products such as
/// `0.07 * 100` do not round up past the intended integer.
pub fn batch_size(n: usize, fraction: f64) -> usize {
    let raw = fraction * n as f64;
    ((raw - 1e-9).ceil() as usize).max(1)
}

/// Seeded shuffle of `0..n` cut into consecutive chunks of
/// `batch_size(n, fraction)`.
pub fn batch_indices(n: usize, fraction: f64, seed: u64) -> Vec<Vec<usize>> {
    if n == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order
        .chunks(batch_size(n, fraction))
        .map(<[usize]>::to_vec)
        .collect()
}

pub fn partition_batches(patterns: &[Pattern], config: &MiningConfig) -> Result<Vec<PatternBatch>> {
    if patterns.is_empty() {
        return Err(Error::Empty("no patterns to batch"));
    }
    if !(config.batch_fraction > 0.0 && config.batch_fraction <= 1.0) {
        return Err(Error::invalid(format!(
            "batch_fraction must lie in (0, 1], got {}",
            config.batch_fraction
        )));
    }
    Ok(
        batch_indices(patterns.len(), config.batch_fraction, config.shuffle_seed)
            .into_iter()
            .enumerate()
            .map(|(index, chunk)| PatternBatch {
                index,
                patterns: chunk.into_iter().map(|i| patterns[i].clone()).collect(),
            })
            .collect(),
    )
}
