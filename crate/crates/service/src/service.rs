//! Synchronous service operations over a [`Store`]. The HTTP layer runs these
//! on blocking threads.
//!
//! Sessions are cached in memory after first use and written back after every
//! state change. A restarted process rebuilds a session from its record:
//! workspaces are re-parsed and features re-derived, both deterministically.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, MutexGuard};

use chrono::Utc;
use ipd_core::io::{parse_dataset, parse_itemsets_with_label_items};
use ipd_core::miner::{ingest_pattern_text, mine_closed_itemsets, SupportMismatch};
use ipd_core::model::{Feedback, PatternKind};
use ipd_core::session::{
    FeatureTable, FeedbackRequest, IterationRecord, IterationSummary, Recommendation, Session,
    SessionConfig, SessionStatus, Workspace,
};
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::error::{ApiError, ApiResult};
use crate::store::{DatasetRecord, PatternSource, SessionRecord, Store, SESSION_FORMAT};

#[derive(Debug, Clone, Deserialize)]
pub struct RegisterDataset {
    #[serde(default)]
    pub name: Option<String>,
    pub kind: PatternKind,
    /// Transactions in the text format of `kind`.
    pub data: String,
    /// Pattern file contents; itemset datasets may mine instead.
    #[serde(default)]
    pub patterns: Option<String>,
    #[serde(default)]
    pub min_support: Option<usize>,
    #[serde(default)]
    pub label_items: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub dataset_id: String,
    pub name: String,
    pub kind: PatternKind,
    pub transactions: usize,
    pub patterns: usize,
    pub classes: Option<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub support_warnings: Vec<SupportMismatch>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct CreateSession {
    pub dataset_id: String,
    #[serde(default)]
    pub config: SessionConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionInfo {
    pub session_id: String,
    pub dataset_id: String,
    pub status: SessionStatus,
    pub iteration: usize,
    pub feedback_count: usize,
    pub classes: u32,
    pub config: SessionConfig,
    pub created_at: chrono::DateTime<Utc>,
    pub updated_at: chrono::DateTime<Utc>,
}

/// A pending request, or the terminal status when there is none.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeedbackResponse {
    pub session_id: String,
    pub status: SessionStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub request: Option<FeedbackRequest>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatingsResponse {
    pub session_id: String,
    #[serde(flatten)]
    pub summary: IterationSummary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecommendationsResponse {
    pub session_id: String,
    pub interesting_class: u32,
    pub items: Vec<Recommendation>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsResponse {
    pub session_id: String,
    pub status: SessionStatus,
    pub iteration: usize,
    pub feedback_count: usize,
    pub history: Vec<IterationRecord>,
    /// Flattened copy of the per-iteration held-out F-scores.
    pub f_scores: Vec<Option<f64>>,
}

/// A parsed dataset with features cached per feature configuration.
struct LoadedDataset {
    record: DatasetRecord,
    workspace: Arc<Workspace>,
    features: Mutex<HashMap<String, Arc<FeatureTable>>>,
}

impl LoadedDataset {
    fn features_for(&self, config: &SessionConfig) -> ApiResult<Arc<FeatureTable>> {
        let key = serde_json::to_string(&config.features)?;
        let mut cache = lock(&self.features);
        if let Some(table) = cache.get(&key) {
            return Ok(table.clone());
        }
        let table = Arc::new(self.workspace.featurize(&config.features)?);
        cache.insert(key, table.clone());
        Ok(table)
    }
}

struct LiveSession {
    record: SessionRecord,
    session: Session,
}

pub struct Service {
    store: Store,
    datasets: Mutex<HashMap<String, Arc<LoadedDataset>>>,
    sessions: Mutex<HashMap<String, Arc<Mutex<LiveSession>>>>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    // a panic mid-request must not take every later request down with it
    m.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

impl Service {
    pub fn new(store: Store) -> Self {
        Service {
            store,
            datasets: Mutex::new(HashMap::new()),
            sessions: Mutex::new(HashMap::new()),
        }
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn register_dataset(&self, request: RegisterDataset) -> ApiResult<DatasetInfo> {
        let source = match (&request.patterns, request.min_support) {
            (Some(_), Some(_)) => {
                return Err(ApiError::BadRequest(
                    "give either patterns or min_support, not both".into(),
                ))
            }
            (Some(_), None) => PatternSource::File,
            (None, Some(min_support)) if request.kind == PatternKind::Set => {
                PatternSource::Mined { min_support }
            }
            (None, Some(_)) => {
                return Err(ApiError::BadRequest(format!(
                    "{} patterns cannot be mined here; upload a pattern file",
                    request.kind
                )))
            }
            (None, None) => {
                return Err(ApiError::BadRequest(
                    "patterns or min_support is required".into(),
                ))
            }
        };
        if !request.label_items.is_empty() && request.kind != PatternKind::Set {
            return Err(ApiError::BadRequest(
                "label_items only applies to itemset data".into(),
            ));
        }
        let dataset_id = Uuid::new_v4().to_string();
        let record = DatasetRecord {
            name: request.name.clone().unwrap_or_else(|| dataset_id.clone()),
            dataset_id: dataset_id.clone(),
            kind: request.kind,
            label_items: request.label_items.clone(),
            patterns: source,
            created_at: Utc::now(),
        };
        let (loaded, warnings) =
            build_dataset(record.clone(), &request.data, request.patterns.as_deref())?;
        self.store
            .save_dataset(&record, &request.data, request.patterns.as_deref())?;
        let info = dataset_info(&loaded, warnings);
        lock(&self.datasets).insert(dataset_id, Arc::new(loaded));
        tracing::info!(dataset_id = %info.dataset_id, patterns = info.patterns, "dataset registered");
        Ok(info)
    }

    pub fn dataset_info(&self, id: &str) -> ApiResult<DatasetInfo> {
        Ok(dataset_info(&*self.dataset(id)?, Vec::new()))
    }

    fn dataset(&self, id: &str) -> ApiResult<Arc<LoadedDataset>> {
        if let Some(d) = lock(&self.datasets).get(id) {
            return Ok(d.clone());
        }
        let (record, data, patterns) = self.store.load_dataset(id)?;
        let (loaded, _) = build_dataset(record, &data, patterns.as_deref())?;
        let mut cache = lock(&self.datasets);
        Ok(cache
            .entry(id.to_owned())
            .or_insert_with(|| Arc::new(loaded))
            .clone())
    }

    pub fn create_session(&self, request: CreateSession) -> ApiResult<SessionInfo> {
        request.config.validate()?;
        let dataset = self.dataset(&request.dataset_id)?;
        let features = dataset.features_for(&request.config)?;
        let session =
            Session::with_features(dataset.workspace.clone(), features, request.config.clone())?;
        let now = Utc::now();
        let record = SessionRecord {
            format: SESSION_FORMAT.to_owned(),
            session_id: Uuid::new_v4().to_string(),
            dataset_id: request.dataset_id,
            config: request.config,
            state: session.state().clone(),
            created_at: now,
            updated_at: now,
        };
        self.store.save_session(&record)?;
        let live = LiveSession { record, session };
        let info = session_info(&live);
        lock(&self.sessions).insert(info.session_id.clone(), Arc::new(Mutex::new(live)));
        tracing::info!(session_id = %info.session_id, dataset_id = %info.dataset_id, "session created");
        Ok(info)
    }

    fn session(&self, id: &str) -> ApiResult<Arc<Mutex<LiveSession>>> {
        if let Some(s) = lock(&self.sessions).get(id) {
            return Ok(s.clone());
        }
        let record = self.store.load_session(id)?;
        let dataset = self.dataset(&record.dataset_id)?;
        let features = dataset.features_for(&record.config)?;
        let session = Session::resume(
            dataset.workspace.clone(),
            features,
            record.config.clone(),
            record.state.clone(),
        )?;
        tracing::info!(
            session_id = id,
            iteration = record.state.iteration,
            "session restored from store"
        );
        let live = Arc::new(Mutex::new(LiveSession { record, session }));
        Ok(lock(&self.sessions)
            .entry(id.to_owned())
            .or_insert(live)
            .clone())
    }

    pub fn session_info(&self, id: &str) -> ApiResult<SessionInfo> {
        let live = self.session(id)?;
        let guard = lock(&live);
        Ok(session_info(&guard))
    }

    pub fn next_feedback(&self, id: &str) -> ApiResult<FeedbackResponse> {
        let live = self.session(id)?;
        let mut guard = lock(&live);
        let before = guard.session.state().clone();
        let request = guard.session.next_feedback()?;
        if guard.session.state() != &before {
            self.persist(&mut guard)?;
        }
        Ok(FeedbackResponse {
            session_id: id.to_owned(),
            status: guard.session.status(),
            request,
        })
    }

    pub fn submit_ratings(&self, id: &str, ratings: &[Feedback]) -> ApiResult<RatingsResponse> {
        let live = self.session(id)?;
        let mut guard = lock(&live);
        let summary = guard.session.submit(ratings)?;
        self.persist(&mut guard)?;
        tracing::info!(
            session_id = id,
            iteration = summary.iteration,
            delta_theta = summary.delta_theta,
            status = summary.status.name(),
            "ratings applied"
        );
        Ok(RatingsResponse {
            session_id: id.to_owned(),
            summary,
        })
    }

    pub fn recommendations(&self, id: &str, top_n: usize) -> ApiResult<RecommendationsResponse> {
        let live = self.session(id)?;
        let guard = lock(&live);
        Ok(RecommendationsResponse {
            session_id: id.to_owned(),
            interesting_class: guard.session.interesting_class(),
            items: guard.session.recommendations(top_n, false, false)?,
        })
    }

    pub fn metrics(&self, id: &str) -> ApiResult<MetricsResponse> {
        let live = self.session(id)?;
        let guard = lock(&live);
        let state = guard.session.state();
        Ok(MetricsResponse {
            session_id: id.to_owned(),
            status: state.status,
            iteration: state.iteration,
            feedback_count: state.feedback_log.len(),
            f_scores: state.history.iter().map(|r| r.f_score).collect(),
            history: state.history.clone(),
        })
    }

    fn persist(&self, live: &mut LiveSession) -> ApiResult<()> {
        let mut record = live.record.clone();
        record.state = live.session.state().clone();
        record.updated_at = Utc::now();
        self.store.save_session(&record)?;
        live.record = record;
        Ok(())
    }
}

fn build_dataset(
    record: DatasetRecord,
    data: &str,
    patterns: Option<&str>,
) -> ApiResult<(LoadedDataset, Vec<SupportMismatch>)> {
    let source = format!("dataset {}", record.dataset_id);
    let dataset = if record.label_items.is_empty() {
        parse_dataset(data, record.kind, &source)?
    } else {
        let labels: Vec<&str> = record.label_items.iter().map(String::as_str).collect();
        parse_itemsets_with_label_items(data, &labels, &source)?
    };
    let (mined, warnings) = match (&record.patterns, patterns) {
        (PatternSource::Mined { min_support }, _) => {
            (mine_closed_itemsets(&dataset, *min_support)?, Vec::new())
        }
        (PatternSource::File, Some(text)) => {
            let ingested = ingest_pattern_text(
                text,
                record.kind,
                &dataset,
                &format!("patterns {}", record.dataset_id),
            )?;
            (ingested.patterns, ingested.warnings)
        }
        (PatternSource::File, None) => {
            return Err(ApiError::Corrupt("pattern file missing".into()))
        }
    };
    let workspace = Arc::new(Workspace::new(dataset, mined)?);
    Ok((
        LoadedDataset {
            record,
            workspace,
            features: Mutex::new(HashMap::new()),
        },
        warnings,
    ))
}

fn dataset_info(d: &LoadedDataset, support_warnings: Vec<SupportMismatch>) -> DatasetInfo {
    DatasetInfo {
        dataset_id: d.record.dataset_id.clone(),
        name: d.record.name.clone(),
        kind: d.record.kind,
        transactions: d.workspace.dataset().len(),
        patterns: d.workspace.patterns().len(),
        classes: d.workspace.dataset().class_count(),
        support_warnings,
    }
}

fn session_info(live: &LiveSession) -> SessionInfo {
    let state = live.session.state();
    SessionInfo {
        session_id: live.record.session_id.clone(),
        dataset_id: live.record.dataset_id.clone(),
        status: state.status,
        iteration: state.iteration,
        feedback_count: state.feedback_log.len(),
        classes: live.session.class_count(),
        config: live.record.config.clone(),
        created_at: live.record.created_at,
        updated_at: live.record.updated_at,
    }
}
