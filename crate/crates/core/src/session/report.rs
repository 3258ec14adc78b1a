//! End-of-session reports and the strategy ablation harness.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    FeatureTable, IterationRecord, Recommendation, Session, SessionConfig, SessionStatus, Workspace,
};
use crate::error::Result;
use crate::model::PatternKind;
use crate::select::StrategyVariant;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub kind: PatternKind,
    pub transactions: usize,
    pub patterns: usize,
    pub classes: u32,
    pub feature_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub train_patterns: usize,
    pub test_patterns: usize,
    pub unratable_patterns: usize,
    pub batches: usize,
}

/// Everything a finished (or paused) session produced. Serializing the same
/// run twice yields identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub config: SessionConfig,
    pub dataset: DatasetSummary,
    pub split: SplitSummary,
    pub status: SessionStatus,
    pub iterations: usize,
    pub feedback_count: usize,
    pub history: Vec<IterationRecord>,
    pub final_f_score: Option<f64>,
    pub final_accuracy: Option<f64>,
    pub interesting_class: u32,
    /// Unrated patterns predicted as the interesting class (held-out fold
    /// only when there is one), best first, at most `report_top_n`.
    pub recommended: Vec<Recommendation>,
}

impl SessionReport {
    pub(crate) fn build(session: &Session) -> Result<Self> {
        let state = session.state();
        let last = state.history.last();
        let test_only = !session.plan.test.is_empty();
        let recommended = if state.feedback_log.is_empty() {
            Vec::new()
        } else {
            session.recommendations(session.config.report_top_n, true, test_only)?
        };
        Ok(SessionReport {
            config: session.config.clone(),
            dataset: DatasetSummary {
                kind: session.ws.kind(),
                transactions: session.ws.dataset().len(),
                patterns: session.ws.patterns().len(),
                classes: session.plan.classes,
                feature_dim: session.features.dim(),
            },
            split: SplitSummary {
                train_patterns: session.plan.train_count,
                test_patterns: session.plan.test.len(),
                unratable_patterns: session.plan.unratable,
                batches: session.plan.batches.len(),
            },
            status: state.status,
            iterations: state.iteration,
            feedback_count: state.feedback_log.len(),
            history: state.history.clone(),
            final_f_score: last.and_then(|r| r.f_score),
            final_accuracy: last.and_then(|r| r.accuracy),
            interesting_class: session.plan.interesting,
            recommended,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRun {
    pub variant: StrategyVariant,
    pub seed: u64,
    pub final_f_score: f64,
    /// Held-out F-score after each iteration.
    pub curve: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub runs: Vec<AblationRun>,
    /// Median final F-score per variant, in the order the variants were run.
    pub medians: Vec<(String, f64)>,
}

impl AblationReport {
    pub fn median_of(&self, name: &str) -> Option<f64> {
        self.medians
            .iter()
            .find(|(n, _)| n == name)
            .map(|&(_, m)| m)
    }
}

/// Runs every variant in `variants` once per seed on shared features, with
/// everything else taken from `base`. Runs that never produce a held-out score
/// count as 0.
pub fn run_ablation(
    ws: Arc<Workspace>,
    features: Arc<FeatureTable>,
    base: &SessionConfig,
    variants: &[StrategyVariant],
    seeds: &[u64],
) -> Result<AblationReport> {
    let mut runs = Vec::new();
    let mut medians = Vec::new();
    for variant in variants {
        let mut finals = Vec::with_capacity(seeds.len());
        for &seed in seeds {
            let mut config = base.clone();
            config.seed = seed;
            config.strategy.variant = *variant;
            let mut session = Session::with_features(ws.clone(), features.clone(), config)?;
            session.run_to_end()?;
            let curve: Vec<f64> = session
                .state()
                .history
                .iter()
                .map(|r| r.f_score.unwrap_or(0.0))
                .collect();
            let final_f_score = curve.last().copied().unwrap_or(0.0);
            finals.push(final_f_score);
            runs.push(AblationRun {
                variant: *variant,
                seed,
                final_f_score,
                curve,
                iterations: session.state().iteration,
            });
        }
        medians.push((variant.name().to_owned(), median(&mut finals)));
    }
    Ok(AblationReport { runs, medians })
}

/// Median with the mean of the middle pair for even lengths; 0 when empty.
pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    }
}
