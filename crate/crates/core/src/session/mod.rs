//! The interactive loop: take the next batch, pick patterns to rate, collect
//! ratings, retrain on everything rated so far, stop when the model settles.
//!
//! [`Session`] is a state machine. `next_feedback` moves it from `Running` to
//! `AwaitingFeedback` and returns the patterns to rate; `submit` applies the
//! ratings, retrains and moves it back to `Running` (or to a terminal status).
//! With an oracle rater `run_iteration` does both halves.

pub mod baseline;
pub mod oracle;
mod report;
pub mod workspace;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use oracle::{oracle_rate, ContainmentBasis, Oracle, OracleSpec};
pub use report::{median, run_ablation, AblationReport, AblationRun, SessionReport};
pub use workspace::{FeatureConfig, FeatureTable, FeaturizerKind, Workspace};

use crate::error::{Error, Result};
use crate::learner::{accuracy, weighted_f_score, SoftmaxModel, TrainOptions, TrainingSet};
use crate::miner::batch_indices;
use crate::model::{FeatureVector, Feedback, Pattern, PatternKind, Payload};
use crate::select::{select_for_feedback, SelectionStrategy};

/// Who rates the selected patterns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RaterSpec {
    Oracle {
        oracle: OracleSpec,
    },
    Human {
        classes: u32,
        /// Optional display name per rating, lowest rating first.
        #[serde(default)]
        rating_names: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub strategy: SelectionStrategy,
    pub batch_fraction: f64,
    pub min_iterations: usize,
    pub stop_threshold: f64,
    /// Hard cap on iterations; reaching it ends the session as `Exhausted`.
    pub max_iterations: Option<usize>,
    pub rater: RaterSpec,
    /// Cross-validation folds; only used when an oracle can label the
    /// held-out fold.
    pub folds: usize,
    pub test_fold: usize,
    pub seed: u64,
    pub lambda: f64,
    /// Class whose probability ranks recommendations. Defaults to 1 for
    /// oracles (interesting / first class) and to the top rating for humans.
    pub interesting_class: Option<u32>,
    pub features: FeatureConfig,
    pub training: TrainOptions,
    /// Number of recommendations kept in the final report.
    pub report_top_n: usize,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            strategy: SelectionStrategy::default(),
            batch_fraction: 0.02,
            min_iterations: 10,
            stop_threshold: 1e-4,
            max_iterations: None,
            rater: RaterSpec::Oracle {
                oracle: OracleSpec::MajorityClass,
            },
            folds: 5,
            test_fold: 0,
            seed: 0,
            lambda: 1.0,
            interesting_class: None,
            features: FeatureConfig::default(),
            training: TrainOptions::default(),
            report_top_n: 100,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        self.strategy.validate()?;
        if !(self.stop_threshold > 0.0 && self.stop_threshold.is_finite()) {
            return Err(Error::invalid(format!(
                "stop_threshold must be positive, got {}",
                self.stop_threshold
            )));
        }
        if self.min_iterations == 0 {
            return Err(Error::invalid("min_iterations must be at least 1"));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::invalid("max_iterations must be at least 1"));
        }
        if !(self.batch_fraction > 0.0 && self.batch_fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "batch_fraction must be in (0, 1], got {}",
                self.batch_fraction
            )));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        match &self.rater {
            RaterSpec::Oracle { oracle } => {
                oracle.validate()?;
                if self.folds < 2 {
                    return Err(Error::invalid(
                        "at least 2 folds are needed to hold out a test fold",
                    ));
                }
                if self.test_fold >= self.folds {
                    return Err(Error::invalid(format!(
                        "test_fold {} is not below folds {}",
                        self.test_fold, self.folds
                    )));
                }
            }
            RaterSpec::Human {
                classes,
                rating_names,
            } => {
                if *classes < 2 {
                    return Err(Error::invalid(
                        "a human rater needs at least 2 rating levels",
                    ));
                }
                if !rating_names.is_empty() && rating_names.len() != *classes as usize {
                    return Err(Error::invalid(format!(
                        "{} rating names given for {classes} rating levels",
                        rating_names.len()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn has_oracle(&self) -> bool {
        matches!(self.rater, RaterSpec::Oracle { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Running,
    AwaitingFeedback,
    Converged,
    Exhausted,
}

impl SessionStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, SessionStatus::Converged | SessionStatus::Exhausted)
    }

    pub fn name(self) -> &'static str {
        match self {
            SessionStatus::Running => "running",
            SessionStatus::AwaitingFeedback => "awaiting_feedback",
            SessionStatus::Converged => "converged",
            SessionStatus::Exhausted => "exhausted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackEntry {
    pub pattern_id: usize,
    pub features: FeatureVector,
    pub rating: u32,
    pub iteration: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingRequest {
    pub iteration: usize,
    pub batch_index: usize,
    pub pattern_ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub batch_index: usize,
    pub selected: Vec<usize>,
    pub ratings: Vec<u32>,
    /// Frobenius norm of the change in theta caused by this iteration.
    pub delta_theta: f64,
    pub cost: f64,
    pub train_iterations: usize,
    /// Held-out weighted F-score, when an oracle labels the test fold.
    pub f_score: Option<f64>,
    pub accuracy: Option<f64>,
}

/// Everything needed to continue a session; features and splits are
/// recomputed from the workspace and config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    /// Completed iterations.
    pub iteration: usize,
    pub status: SessionStatus,
    pub model: SoftmaxModel,
    pub feedback_log: Vec<FeedbackEntry>,
    pub batch_cursor: usize,
    pub pending: Option<PendingRequest>,
    pub history: Vec<IterationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDrawing {
    pub vertices: Vec<(u32, String)>,
    pub edges: Vec<(u32, u32, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackItem {
    pub pattern_id: usize,
    pub kind: PatternKind,
    pub rendering: String,
    pub support: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphDrawing>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRequest {
    pub iteration: usize,
    pub items: Vec<FeedbackItem>,
    /// Ratings run from 1 to `classes`.
    pub classes: u32,
    pub rating_names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationSummary {
    pub iteration: usize,
    pub delta_theta: f64,
    pub status: SessionStatus,
    pub f_score: Option<f64>,
    pub accuracy: Option<f64>,
    pub feedback_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub pattern_id: usize,
    pub rendering: String,
    pub predicted_class: u32,
    /// Probability of the interesting class.
    pub probability: f64,
}

/// Derived, not persisted: fold split, batches and oracle labels.
#[derive(Debug, Clone)]
struct Plan {
    classes: u32,
    interesting: u32,
    /// Positions of the held-out patterns, ascending.
    test: Vec<usize>,
    train_count: usize,
    /// Batches of pattern positions drawn from the training folds.
    batches: Vec<Vec<usize>>,
    /// Oracle rating per pattern position; `None` when unratable.
    oracle_ratings: Option<Vec<Option<u32>>>,
    unratable: usize,
}

const BATCH_SEED_MIX: u64 = 0x9e37_79b9_7f4a_7c15;

impl Plan {
    fn build(ws: &Workspace, config: &SessionConfig) -> Result<Self> {
        let n = ws.patterns().len();
        let dataset = ws.dataset();
        let (classes, oracle_ratings) = match &config.rater {
            RaterSpec::Oracle { oracle } => {
                let prepared = Oracle::prepare(oracle, dataset)?;
                let ratings = ws
                    .patterns()
                    .iter()
                    .map(|p| match prepared.rate(p, dataset) {
                        Ok(r) => Ok(Some(r)),
                        Err(Error::Unsupported(_)) => Ok(None),
                        Err(e) => Err(e),
                    })
                    .collect::<Result<Vec<_>>>()?;
                (prepared.class_count(), Some(ratings))
            }
            RaterSpec::Human { classes, .. } => (*classes, None),
        };
        let interesting = config
            .interesting_class
            .unwrap_or(if oracle_ratings.is_some() { 1 } else { classes });
        if interesting == 0 || interesting > classes {
            return Err(Error::invalid(format!(
                "interesting_class {interesting} is outside 1..={classes}"
            )));
        }

        let usable: Vec<usize> = match &oracle_ratings {
            Some(r) => (0..n).filter(|&i| r[i].is_some()).collect(),
            None => (0..n).collect(),
        };
        let unratable = n - usable.len();
        let (mut train, mut test) = if oracle_ratings.is_some() {
            let mut order = usable.clone();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));
            let mut train = Vec::new();
            let mut test = Vec::new();
            for (i, pos) in order.into_iter().enumerate() {
                if i % config.folds == config.test_fold {
                    test.push(pos);
                } else {
                    train.push(pos);
                }
            }
            (train, test)
        } else {
            (usable, Vec::new())
        };
        train.sort_unstable();
        test.sort_unstable();
        if train.is_empty() {
            return Err(Error::Empty("no ratable training patterns"));
        }
        let batches = batch_indices(
            train.len(),
            config.batch_fraction,
            config.seed ^ BATCH_SEED_MIX,
        )
        .into_iter()
        .map(|chunk| chunk.into_iter().map(|i| train[i]).collect())
        .collect();
        Ok(Plan {
            classes,
            interesting,
            test,
            train_count: train.len(),
            batches,
            oracle_ratings,
            unratable,
        })
    }
}

pub struct Session {
    ws: Arc<Workspace>,
    features: Arc<FeatureTable>,
    config: SessionConfig,
    plan: Plan,
    state: SessionState,
}

impl Session {
    /// Featurizes the workspace and starts a fresh session.
    pub fn begin(ws: Arc<Workspace>, config: SessionConfig) -> Result<Self> {
        config.validate()?;
        let features = Arc::new(ws.featurize(&config.features)?);
        Self::with_features(ws, features, config)
    }

    /// Starts a fresh session with precomputed features.
    pub fn with_features(
        ws: Arc<Workspace>,
        features: Arc<FeatureTable>,
        config: SessionConfig,
    ) -> Result<Self> {
        config.validate()?;
        check_features(&ws, &features)?;
        let plan = Plan::build(&ws, &config)?;
        let model = SoftmaxModel::zeros(plan.classes as usize, features.dim(), config.lambda)?;
        let state = SessionState {
            iteration: 0,
            status: SessionStatus::Running,
            model,
            feedback_log: Vec::new(),
            batch_cursor: 0,
            pending: None,
            history: Vec::new(),
        };
        Ok(Session {
            ws,
            features,
            config,
            plan,
            state,
        })
    }

    /// Continues a session from a saved state.
    pub fn resume(
        ws: Arc<Workspace>,
        features: Arc<FeatureTable>,
        config: SessionConfig,
        state: SessionState,
    ) -> Result<Self> {
        config.validate()?;
        check_features(&ws, &features)?;
        let plan = Plan::build(&ws, &config)?;
        if state.model.class_count() != plan.classes as usize
            || state.model.feature_dim() != features.dim()
        {
            return Err(Error::invalid(
                "saved model shape does not match the session",
            ));
        }
        Ok(Session {
            ws,
            features,
            config,
            plan,
            state,
        })
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn workspace(&self) -> &Arc<Workspace> {
        &self.ws
    }

    pub fn features(&self) -> &Arc<FeatureTable> {
        &self.features
    }

    pub fn status(&self) -> SessionStatus {
        self.state.status
    }

    pub fn class_count(&self) -> u32 {
        self.plan.classes
    }

    pub fn interesting_class(&self) -> u32 {
        self.plan.interesting
    }

    pub fn test_positions(&self) -> &[usize] {
        &self.plan.test
    }

    pub fn batch_count(&self) -> usize {
        self.plan.batches.len()
    }

    fn rated_ids(&self) -> BTreeSet<usize> {
        self.state
            .feedback_log
            .iter()
            .map(|e| e.pattern_id)
            .collect()
    }

    fn budget_spent(&self) -> bool {
        self.config
            .max_iterations
            .is_some_and(|m| self.state.iteration >= m)
    }

    /// Next batch at or after `from` that still has unrated patterns.
    fn next_batch(&self, from: usize) -> Option<(usize, Vec<usize>)> {
        let rated = self.rated_ids();
        (from..self.plan.batches.len()).find_map(|b| {
            let members: Vec<usize> = self.plan.batches[b]
                .iter()
                .copied()
                .filter(|&pos| !rated.contains(&self.ws.patterns()[pos].id))
                .collect();
            (!members.is_empty()).then_some((b, members))
        })
    }

    /// The pending request, advancing to a new one when the session is
    /// running. `None` once the session has ended.
    pub fn next_feedback(&mut self) -> Result<Option<FeedbackRequest>> {
        match self.state.status {
            SessionStatus::Converged | SessionStatus::Exhausted => return Ok(None),
            SessionStatus::AwaitingFeedback => {
                let pending = self
                    .state
                    .pending
                    .as_ref()
                    .ok_or(Error::InvalidState("awaiting feedback without a request"))?;
                return Ok(Some(self.request_for(pending)));
            }
            SessionStatus::Running => {}
        }
        if self.budget_spent() {
            self.state.status = SessionStatus::Exhausted;
            return Ok(None);
        }
        let Some((batch_index, members)) = self.next_batch(self.state.batch_cursor) else {
            self.state.status = SessionStatus::Exhausted;
            return Ok(None);
        };
        let iteration = self.state.iteration + 1;
        let vectors: Vec<FeatureVector> = members
            .iter()
            .map(|&p| self.features.vectors[p].clone())
            .collect();
        let model = (!self.state.feedback_log.is_empty()).then_some(&self.state.model);
        let picks = select_for_feedback(&self.config.strategy, model, &vectors, iteration)?;
        let pending = PendingRequest {
            iteration,
            batch_index,
            pattern_ids: picks
                .iter()
                .map(|&i| self.ws.patterns()[members[i]].id)
                .collect(),
        };
        let request = self.request_for(&pending);
        self.state.pending = Some(pending);
        self.state.batch_cursor = batch_index + 1;
        self.state.status = SessionStatus::AwaitingFeedback;
        Ok(Some(request))
    }

    fn request_for(&self, pending: &PendingRequest) -> FeedbackRequest {
        let rating_names = match &self.config.rater {
            RaterSpec::Human { rating_names, .. } => rating_names.clone(),
            RaterSpec::Oracle { .. } => Vec::new(),
        };
        FeedbackRequest {
            iteration: pending.iteration,
            items: pending
                .pattern_ids
                .iter()
                .map(|&id| {
                    self.item_for(
                        &self.ws.patterns()[self.ws.position_of(id).expect("pending ids exist")],
                    )
                })
                .collect(),
            classes: self.plan.classes,
            rating_names,
        }
    }

    fn item_for(&self, pattern: &Pattern) -> FeedbackItem {
        let vocab = &self.ws.dataset().vocab;
        let graph = match &pattern.payload {
            Payload::Graph(g) => Some(GraphDrawing {
                vertices: g
                    .vertices
                    .iter()
                    .map(|&(id, l)| (id, vocab.name(l).to_owned()))
                    .collect(),
                edges: g
                    .edges
                    .iter()
                    .map(|&(u, v, l)| (u, v, vocab.name(l).to_owned()))
                    .collect(),
            }),
            _ => None,
        };
        FeedbackItem {
            pattern_id: pattern.id,
            kind: pattern.kind(),
            rendering: pattern.payload.render(vocab),
            support: pattern.support,
            graph,
        }
    }

    /// Applies ratings for exactly the pending patterns, retrains and updates
    /// the status. On any error the session is left unchanged.
    pub fn submit(&mut self, ratings: &[Feedback]) -> Result<IterationSummary> {
        if self.state.status != SessionStatus::AwaitingFeedback {
            return Err(Error::InvalidState(self.state.status.name()));
        }
        let pending = self
            .state
            .pending
            .clone()
            .ok_or(Error::InvalidState("awaiting feedback without a request"))?;
        let ordered = self.match_ratings(&pending, ratings)?;

        let mut log = self.state.feedback_log.clone();
        for (&id, &rating) in pending.pattern_ids.iter().zip(&ordered) {
            let pos = self.ws.position_of(id).expect("pending ids exist");
            log.push(FeedbackEntry {
                pattern_id: id,
                features: self.features.vectors[pos].clone(),
                rating,
                iteration: pending.iteration,
            });
        }
        let train = TrainingSet::new(log.iter().map(|e| (e.features.clone(), e.rating)).collect());
        let (model, report) = self.state.model.train(&train, &self.config.training)?;
        let delta_theta = model.distance(&self.state.model)?;
        let (f_score, acc) = self.evaluate(&model)?;

        let iteration = pending.iteration;
        let status = if iteration >= self.config.min_iterations
            && delta_theta < self.config.stop_threshold
        {
            SessionStatus::Converged
        } else if self.config.max_iterations.is_some_and(|m| iteration >= m) {
            SessionStatus::Exhausted
        } else {
            SessionStatus::Running
        };

        self.state.history.push(IterationRecord {
            iteration,
            batch_index: pending.batch_index,
            selected: pending.pattern_ids.clone(),
            ratings: ordered,
            delta_theta,
            cost: report.cost,
            train_iterations: report.iterations,
            f_score,
            accuracy: acc,
        });
        self.state.feedback_log = log;
        self.state.model = model;
        self.state.iteration = iteration;
        self.state.pending = None;
        self.state.status = status;
        if status == SessionStatus::Running && self.next_batch(self.state.batch_cursor).is_none() {
            self.state.status = SessionStatus::Exhausted;
        }
        Ok(IterationSummary {
            iteration,
            delta_theta,
            status: self.state.status,
            f_score,
            accuracy: acc,
            feedback_count: self.state.feedback_log.len(),
        })
    }

    /// Ratings in pending order, after checking coverage and range.
    fn match_ratings(&self, pending: &PendingRequest, ratings: &[Feedback]) -> Result<Vec<u32>> {
        let mut given: BTreeMap<usize, u32> = BTreeMap::new();
        let mut unexpected = Vec::new();
        for r in ratings {
            if !pending.pattern_ids.contains(&r.pattern_id)
                || given.insert(r.pattern_id, r.rating).is_some()
            {
                unexpected.push(r.pattern_id);
            }
        }
        let missing: Vec<usize> = pending
            .pattern_ids
            .iter()
            .copied()
            .filter(|id| !given.contains_key(id))
            .collect();
        if !missing.is_empty() || !unexpected.is_empty() {
            return Err(Error::RatingSetMismatch {
                missing,
                unexpected,
            });
        }
        pending
            .pattern_ids
            .iter()
            .map(|id| {
                let rating = given[id];
                if rating == 0 || rating > self.plan.classes {
                    Err(Error::RatingOutOfRange {
                        pattern_id: *id,
                        rating,
                        classes: self.plan.classes,
                    })
                } else {
                    Ok(rating)
                }
            })
            .collect()
    }

    /// Weighted F-score and accuracy of `model` on the held-out fold.
    fn evaluate(&self, model: &SoftmaxModel) -> Result<(Option<f64>, Option<f64>)> {
        let Some(ratings) = &self.plan.oracle_ratings else {
            return Ok((None, None));
        };
        if self.plan.test.is_empty() {
            return Ok((None, None));
        }
        let mut predictions = Vec::with_capacity(self.plan.test.len());
        let mut truths = Vec::with_capacity(self.plan.test.len());
        for &pos in &self.plan.test {
            predictions.push(model.predict(&self.features.vectors[pos])?);
            truths.push(ratings[pos].expect("test patterns are ratable"));
        }
        Ok((
            Some(weighted_f_score(&predictions, &truths)?),
            Some(accuracy(&predictions, &truths)?),
        ))
    }

    /// Oracle ratings for the pending request.
    fn oracle_ratings_for(&self, pending: &PendingRequest) -> Result<Vec<Feedback>> {
        let ratings = self
            .plan
            .oracle_ratings
            .as_ref()
            .ok_or_else(|| Error::invalid("session has a human rater"))?;
        pending
            .pattern_ids
            .iter()
            .map(|&id| {
                let pos = self.ws.position_of(id).expect("pending ids exist");
                let rating = ratings[pos].ok_or(Error::Unsupported(id))?;
                Ok(Feedback {
                    pattern_id: id,
                    rating,
                })
            })
            .collect()
    }

    /// One full iteration with the oracle rater; `None` if the session has
    /// already ended.
    pub fn run_iteration(&mut self) -> Result<Option<IterationSummary>> {
        if self.next_feedback()?.is_none() {
            return Ok(None);
        }
        let pending = self.state.pending.clone().expect("request was just issued");
        let ratings = self.oracle_ratings_for(&pending)?;
        self.submit(&ratings).map(Some)
    }

    pub fn run_to_end(&mut self) -> Result<()> {
        while self.run_iteration()?.is_some() {}
        Ok(())
    }

    /// Unrated patterns ranked by the probability of the interesting class,
    /// ties by pattern id. With `predicted_only`, only patterns whose most
    /// likely class is the interesting one; with `test_only`, only the
    /// held-out fold.
    pub fn recommendations(
        &self,
        top_n: usize,
        predicted_only: bool,
        test_only: bool,
    ) -> Result<Vec<Recommendation>> {
        if self.state.feedback_log.is_empty() {
            return Err(Error::Untrained);
        }
        let rated = self.rated_ids();
        let interesting = self.plan.interesting;
        let candidates: Vec<usize> = if test_only {
            self.plan.test.clone()
        } else {
            (0..self.ws.patterns().len()).collect()
        };
        let mut scored = Vec::new();
        for pos in candidates {
            let pattern = &self.ws.patterns()[pos];
            if rated.contains(&pattern.id) {
                continue;
            }
            let p = self
                .state
                .model
                .predict_proba(&self.features.vectors[pos])?;
            let predicted = crate::learner::argmax(&p) as u32 + 1;
            if predicted_only && predicted != interesting {
                continue;
            }
            scored.push((p[interesting as usize - 1], pattern.id, pos, predicted));
        }
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let vocab = &self.ws.dataset().vocab;
        Ok(scored
            .into_iter()
            .take(top_n)
            .map(
                |(probability, pattern_id, pos, predicted_class)| Recommendation {
                    pattern_id,
                    rendering: self.ws.patterns()[pos].payload.render(vocab),
                    predicted_class,
                    probability,
                },
            )
            .collect())
    }

    pub fn report(&self) -> Result<SessionReport> {
        SessionReport::build(self)
    }
}

fn check_features(ws: &Workspace, features: &FeatureTable) -> Result<()> {
    if features.vectors.len() != ws.patterns().len() {
        return Err(Error::Dimension {
            expected: ws.patterns().len(),
            actual: features.vectors.len(),
        });
    }
    let dim = features.dim();
    if let Some(bad) = features
        .vectors
        .iter()
        .find(|v| v.dim() != dim || !v.is_valid())
    {
        return Err(Error::Dimension {
            expected: dim,
            actual: bad.dim(),
        });
    }
    Ok(())
}

/// Runs a whole oracle-rated session and returns its final state and report.
pub fn run_session(
    ws: Arc<Workspace>,
    config: SessionConfig,
) -> Result<(SessionState, SessionReport)> {
    let mut session = Session::begin(ws, config)?;
    session.run_to_end()?;
    let report = session.report()?;
    Ok((session.state, report))
}
