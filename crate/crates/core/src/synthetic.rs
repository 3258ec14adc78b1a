//! Seeded generators for labeled demo and test datasets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{Dataset, PatternKind, Payload, Transaction, Vocabulary};

/// Two-class itemset data over items `1..=items`. Class 1 transactions favor
/// the lower half of the items and class 2 the upper half, each item drawn
/// independently; the class of a pattern's supporting transactions is then a
/// linear function of which items it holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparableItemsets {
    pub transactions: usize,
    pub items: usize,
    /// Probability that a transaction is class 1.
    pub class1_prior: f64,
    /// Inclusion probability of an item from the transaction's own half.
    pub own_rate: f64,
    /// Inclusion probability of an item from the other half.
    pub other_rate: f64,
    pub seed: u64,
}

impl Default for SeparableItemsets {
    fn default() -> Self {
        SeparableItemsets {
            transactions: 500,
            items: 10,
            class1_prior: 0.5,
            own_rate: 0.8,
            other_rate: 0.1,
            seed: 7,
        }
    }
}

impl SeparableItemsets {
    pub fn generate(&self) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let vocab = Vocabulary::from_tokens((1..=self.items).map(|i| i.to_string()));
        let half = self.items / 2;
        let mut transactions = Vec::with_capacity(self.transactions);
        let mut labels = Vec::with_capacity(self.transactions);
        for id in 0..self.transactions {
            let class = if rng.random::<f64>() < self.class1_prior {
                1
            } else {
                2
            };
            let own = |item: usize| (item < half) == (class == 1);
            let mut items: Vec<u32> = (0..self.items)
                .filter(|&i| {
                    let rate = if own(i) {
                        self.own_rate
                    } else {
                        self.other_rate
                    };
                    rng.random::<f64>() < rate
                })
                .map(|i| i as u32)
                .collect();
            if items.is_empty() {
                let pick = rng.random_range(0..half.max(1));
                items.push(if class == 1 { pick } else { pick + half } as u32);
            }
            transactions.push(Transaction {
                id,
                payload: Payload::itemset(items),
            });
            labels.push(class);
        }
        Dataset::new(PatternKind::Set, transactions, Some(labels), vocab)
    }
}

/// Sequences over two disjoint alphabets (`a0..` and `b0..`), one alphabet per
/// class, `count` sentences each.
pub fn two_cluster_sequences(count: usize, alphabet: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vocab = Vocabulary::new();
    let mut transactions = Vec::new();
    let mut labels = Vec::new();
    for (class, prefix) in [(1, "a"), (2, "b")] {
        for _ in 0..count {
            let len = rng.random_range(8..=12);
            let events = (0..len)
                .map(|_| vocab.intern(&format!("{prefix}{}", rng.random_range(0..alphabet))))
                .collect();
            transactions.push(Transaction {
                id: transactions.len(),
                payload: Payload::Sequence(events),
            });
            labels.push(class);
        }
    }
    Dataset::new(PatternKind::Sequence, transactions, Some(labels), vocab)
}
