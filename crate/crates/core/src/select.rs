//! Choosing which patterns to ask the user about.
//!
//! Exploitation ranks candidates by expected gradient length (EGL) under the
//! current model; exploration spreads picks with greedy k-center.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::SoftmaxModel;
use crate::model::FeatureVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum StrategyVariant {
    EglOnly,
    KCenterOnly,
    EglThenKCenter,
    /// k-center for the first `explore_iters` iterations, EGL then k-center
    /// for the next `hybrid_iters`, EGL alone afterwards.
    Phased {
        explore_iters: usize,
        hybrid_iters: usize,
    },
}

impl StrategyVariant {
    pub fn phased() -> Self {
        StrategyVariant::Phased {
            explore_iters: 10,
            hybrid_iters: 10,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            StrategyVariant::EglOnly => "egl",
            StrategyVariant::KCenterOnly => "kcenter",
            StrategyVariant::EglThenKCenter => "hybrid",
            StrategyVariant::Phased { .. } => "phased",
        }
    }

    pub fn all() -> [StrategyVariant; 4] {
        [
            StrategyVariant::EglOnly,
            StrategyVariant::KCenterOnly,
            StrategyVariant::EglThenKCenter,
            StrategyVariant::phased(),
        ]
    }
}

impl fmt::Display for StrategyVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "egl" => Ok(StrategyVariant::EglOnly),
            "kcenter" => Ok(StrategyVariant::KCenterOnly),
            "hybrid" => Ok(StrategyVariant::EglThenKCenter),
            "phased" => Ok(StrategyVariant::phased()),
            other => Err(Error::invalid(format!(
                "unknown strategy `{other}` (expected egl, kcenter, hybrid or phased)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionStrategy {
    pub variant: StrategyVariant,
    pub k: usize,
    pub retain_fraction: f64,
}

impl Default for SelectionStrategy {
    fn default() -> Self {
        SelectionStrategy {
            variant: StrategyVariant::EglThenKCenter,
            k: 10,
            retain_fraction: 0.5,
        }
    }
}

impl SelectionStrategy {
    pub fn new(variant: StrategyVariant) -> Self {
        SelectionStrategy {
            variant,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if !(self.retain_fraction > 0.0 && self.retain_fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "retain_fraction must be in (0, 1], got {}",
                self.retain_fraction
            )));
        }
        Ok(())
    }

    /// The concrete behavior used at `iteration` (1-based).
    pub fn variant_at(&self, iteration: usize) -> StrategyVariant {
        match self.variant {
            StrategyVariant::Phased {
                explore_iters,
                hybrid_iters,
            } => {
                if iteration <= explore_iters {
                    StrategyVariant::KCenterOnly
                } else if iteration <= explore_iters + hybrid_iters {
                    StrategyVariant::EglThenKCenter
                } else {
                    StrategyVariant::EglOnly
                }
            }
            v => v,
        }
    }
}

/// Expected norm of the gradient the candidate alone would contribute, over
/// its possible labels weighted by the model's probabilities. The intercept
/// column and the penalty term are left out.
pub fn egl(model: &SoftmaxModel, x: &FeatureVector) -> Result<f64> {
    let p = model.predict_proba(x)?;
    let x_norm = x.squared_norm().sqrt();
    let mut expected = 0.0;
    for (j, &pj) in p.iter().enumerate() {
        // Frobenius norm of rows -x (1{j'=j} - p_j') = |x| * |e_j - p|
        let residual: f64 = p
            .iter()
            .enumerate()
            .map(|(l, &pl)| {
                let r = if l == j { 1.0 - pl } else { -pl };
                r * r
            })
            .sum();
        expected += pj * x_norm * residual.sqrt();
    }
    Ok(expected)
}

pub fn egl_scores(model: &SoftmaxModel, points: &[FeatureVector]) -> Result<Vec<f64>> {
    points.iter().map(|x| egl(model, x)).collect()
}

/// Jaccard distance between binary vectors (0 for two empty sets), Euclidean
/// between dense ones.
pub fn distance(a: &FeatureVector, b: &FeatureVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    match (a, b) {
        (
            FeatureVector::SparseBinary { indices: x, .. },
            FeatureVector::SparseBinary { indices: y, .. },
        ) => {
            let (mut i, mut j, mut common) = (0, 0, 0usize);
            while i < x.len() && j < y.len() {
                match x[i].cmp(&y[j]) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        common += 1;
                        i += 1;
                        j += 1;
                    }
                }
            }
            let union = x.len() + y.len() - common;
            Ok(if union == 0 {
                0.0
            } else {
                1.0 - common as f64 / union as f64
            })
        }
        (FeatureVector::Dense { values: x }, FeatureVector::Dense { values: y }) => Ok(x
            .iter()
            .zip(y)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()),
        _ => Err(Error::MixedRepresentation),
    }
}

fn check_uniform(points: &[FeatureVector]) -> Result<()> {
    if let Some(first) = points.first() {
        for p in points {
            if p.is_sparse() != first.is_sparse() {
                return Err(Error::MixedRepresentation);
            }
            if p.dim() != first.dim() {
                return Err(Error::Dimension {
                    expected: first.dim(),
                    actual: p.dim(),
                });
            }
        }
    }
    Ok(())
}

/// Greedy (Gonzalez) k-center starting at `seed_index`: repeatedly adds the
/// point farthest from its nearest chosen center, ties to the smallest index.
pub fn k_center(points: &[FeatureVector], k: usize, seed_index: usize) -> Result<Vec<usize>> {
    check_uniform(points)?;
    if k > points.len() {
        return Err(Error::invalid(format!(
            "k = {k} exceeds the {} points",
            points.len()
        )));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    if seed_index >= points.len() {
        return Err(Error::invalid(format!(
            "seed index {seed_index} out of range"
        )));
    }
    let mut chosen = vec![seed_index];
    let mut taken = vec![false; points.len()];
    taken[seed_index] = true;
    let mut nearest = points
        .iter()
        .map(|p| distance(p, &points[seed_index]))
        .collect::<Result<Vec<_>>>()?;
    while chosen.len() < k {
        let mut best: Option<usize> = None;
        for i in 0..points.len() {
            if !taken[i] && best.is_none_or(|b| nearest[i] > nearest[b]) {
                best = Some(i);
            }
        }
        let next = best.expect("k <= n leaves an untaken point");
        taken[next] = true;
        chosen.push(next);
        for i in 0..points.len() {
            let d = distance(&points[i], &points[next])?;
            if d < nearest[i] {
                nearest[i] = d;
            }
        }
    }
    Ok(chosen)
}

/// Largest distance from any point to its nearest center.
pub fn covering_radius(points: &[FeatureVector], centers: &[usize]) -> Result<f64> {
    let mut radius: f64 = 0.0;
    for p in points {
        let mut nearest = f64::INFINITY;
        for &c in centers {
            nearest = nearest.min(distance(p, &points[c])?);
        }
        radius = radius.max(nearest);
    }
    Ok(radius)
}

/// Indices sorted by descending score, ties to the smaller index.
fn rank_desc(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Picks at most `strategy.k` batch positions to send for rating.
/// `iteration` is 1-based; before the first trained model (iteration 1 or no
/// model) selection is pure k-center from position 0.
pub fn select_for_feedback(
    strategy: &SelectionStrategy,
    model: Option<&SoftmaxModel>,
    batch: &[FeatureVector],
    iteration: usize,
) -> Result<Vec<usize>> {
    strategy.validate()?;
    if batch.is_empty() {
        return Err(Error::Empty("selection batch"));
    }
    check_uniform(batch)?;
    let k = strategy.k;
    if batch.len() <= k {
        return Ok((0..batch.len()).collect());
    }
    let model = match model {
        Some(m) if iteration > 1 => m,
        _ => return k_center(batch, k, 0),
    };
    let scores = egl_scores(model, batch)?;
    let ranked = rank_desc(&scores);
    match strategy.variant_at(iteration) {
        StrategyVariant::EglOnly => Ok(ranked[..k].to_vec()),
        StrategyVariant::KCenterOnly => k_center(batch, k, ranked[0]),
        StrategyVariant::EglThenKCenter => {
            let retain = retained_count(batch.len(), strategy.retain_fraction, k);
            let candidates: Vec<FeatureVector> =
                ranked[..retain].iter().map(|&i| batch[i].clone()).collect();
            Ok(k_center(&candidates, k, 0)?
                .into_iter()
                .map(|i| ranked[i])
                .collect())
        }
        StrategyVariant::Phased { .. } => unreachable!("variant_at resolves phases"),
    }
}

/// `ceil(fraction * n)`, raised to `k` so a small batch still yields `k`
/// ratings.
pub fn retained_count(n: usize, fraction: f64, k: usize) -> usize {
    let raw = fraction * n as f64;
    let ceil = (raw - 1e-9).ceil().max(1.0) as usize;
    ceil.max(k).min(n)
}
