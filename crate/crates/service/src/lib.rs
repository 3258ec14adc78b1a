//! HTTP+JSON front end for interactive sessions.
//!
//! | method | path | body / query |
//! |---|---|---|
//! | GET  | `/health` | |
//! | POST | `/datasets` | [`RegisterDataset`] |
//! | GET  | `/datasets/{id}` | |
//! | POST | `/sessions` | [`CreateSession`] |
//! | GET  | `/sessions/{id}` | |
//! | GET  | `/sessions/{id}/feedback` | |
//! | POST | `/sessions/{id}/ratings` | `{"ratings": [{"pattern_id", "rating"}]}` |
//! | GET  | `/sessions/{id}/recommendations` | `?top_n=10` |
//! | GET  | `/sessions/{id}/metrics` | |
//!
//! Errors are `{"error": code, "message": text, "details"?: {...}}` with 400
//! for validation failures, 404 for unknown ids and 409 when the session is in
//! the wrong state (no pending request, no trained model yet).

mod error;
mod service;
mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::routing::{get, post};
use axum::{Json, Router};
use ipd_core::model::Feedback;
use serde::Deserialize;
use tokio::net::TcpListener;
use tower_http::trace::TraceLayer;

pub use error::{ApiError, ApiResult};
pub use service::{
    CreateSession, DatasetInfo, FeedbackResponse, MetricsResponse, RatingsResponse,
    RecommendationsResponse, RegisterDataset, Service, SessionInfo,
};
pub use store::{DatasetRecord, PatternSource, SessionRecord, Store};

type Shared = Arc<Service>;

/// Runs `f` on the blocking pool; training and featurization are CPU-bound.
async fn blocking<T, F>(service: Shared, f: F) -> ApiResult<Json<T>>
where
    F: FnOnce(&Service) -> ApiResult<T> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(move || f(&service))
        .await
        .map_err(|e| ApiError::Join(e.to_string()))?
        .map(Json)
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> ApiResult<T> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ApiError::BadRequest(e.body_text()))
}

async fn health() -> &'static str {
    "ok"
}

async fn register_dataset(
    State(s): State<Shared>,
    payload: Result<Json<RegisterDataset>, JsonRejection>,
) -> ApiResult<Json<DatasetInfo>> {
    let request = body(payload)?;
    blocking(s, move |s| s.register_dataset(request)).await
}

async fn get_dataset(
    State(s): State<Shared>,
    Path(id): Path<String>,
) -> ApiResult<Json<DatasetInfo>> {
    blocking(s, move |s| s.dataset_info(&id)).await
}

async fn create_session(
    State(s): State<Shared>,
    payload: Result<Json<CreateSession>, JsonRejection>,
) -> ApiResult<Json<SessionInfo>> {
    let request = body(payload)?;
    blocking(s, move |s| s.create_session(request)).await
}

async fn get_session(
    State(s): State<Shared>,
    Path(id): Path<String>,
) -> ApiResult<Json<SessionInfo>> {
    blocking(s, move |s| s.session_info(&id)).await
}

async fn feedback(
    State(s): State<Shared>,
    Path(id): Path<String>,
) -> ApiResult<Json<FeedbackResponse>> {
    blocking(s, move |s| s.next_feedback(&id)).await
}

#[derive(Debug, Deserialize)]
struct Ratings {
    ratings: Vec<Feedback>,
}

async fn ratings(
    State(s): State<Shared>,
    Path(id): Path<String>,
    payload: Result<Json<Ratings>, JsonRejection>,
) -> ApiResult<Json<RatingsResponse>> {
    let request = body(payload)?;
    blocking(s, move |s| s.submit_ratings(&id, &request.ratings)).await
}

#[derive(Debug, Deserialize)]
struct TopN {
    top_n: Option<usize>,
}

async fn recommendations(
    State(s): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<TopN>,
) -> ApiResult<Json<RecommendationsResponse>> {
    let top_n = q.top_n.unwrap_or(10);
    blocking(s, move |s| s.recommendations(&id, top_n)).await
}

async fn metrics(
    State(s): State<Shared>,
    Path(id): Path<String>,
) -> ApiResult<Json<MetricsResponse>> {
    blocking(s, move |s| s.metrics(&id)).await
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/datasets", post(register_dataset))
        .route("/datasets/{id}", get(get_dataset))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/feedback", get(feedback))
        .route("/sessions/{id}/ratings", post(ratings))
        .route("/sessions/{id}/recommendations", get(recommendations))
        .route("/sessions/{id}/metrics", get(metrics))
        .layer(TraceLayer::new_for_http())
        .with_state(service)
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub store: PathBuf,
    pub addr: SocketAddr,
}

/// Binds `config.addr` and serves until the process is stopped. `on_bound`
/// receives the actual address (useful with port 0).
pub async fn serve(config: ServeConfig, on_bound: impl FnOnce(SocketAddr)) -> ApiResult<()> {
    let service = Arc::new(Service::new(Store::open(&config.store)?));
    let listener = TcpListener::bind(config.addr).await?;
    let addr = listener.local_addr()?;
    tracing::info!(%addr, store = %config.store.display(), "listening");
    on_bound(addr);
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
