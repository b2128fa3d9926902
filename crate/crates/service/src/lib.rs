//! HTTP API for interactive evolution sessions, versioned under `/v1`.
//!
//! A session holds an evolution run on disk. Clients list generations,
//! pick parents and optionally change the constraint labels; `advance`
//! breeds the next generation in the background while clients poll.

pub mod error;
pub mod store;
pub mod thumb;

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use fame_core::evolution::{EvolutionConfig, ShapeEntry};
use fame_core::shape::io::load_shape;
use fame_core::Label;
use serde::{Deserialize, Serialize};

pub use error::ServiceError;
pub use store::{shape_ref, SessionState, SessionStatus, SessionStore};

type ApiResult<T> = Result<T, ServiceError>;
type Store = Arc<SessionStore>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub dataset: String,
    pub config: EvolutionConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdvanceRequest {
    pub selected: Vec<String>,
    #[serde(default)]
    pub labels: Option<Vec<Label>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ListingEntry {
    pub rank: usize,
    #[serde(flatten)]
    pub entry: ShapeEntry,
    pub mesh: String,
    pub thumbnail: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GenerationListing {
    pub session_id: String,
    pub index: usize,
    pub produced: usize,
    pub labels: Vec<Label>,
    pub selected: Vec<String>,
    /// Shapes in ranked order.
    pub shapes: Vec<ListingEntry>,
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> ApiResult<T> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ServiceError::InvalidRequest(e.body_text()))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(ServiceError::internal)?
}

async fn create_session(
    State(store): State<Store>,
    payload: Result<Json<CreateSession>, JsonRejection>,
) -> ApiResult<Response> {
    let req = body(payload)?;
    let state = blocking(move || store.create(&req.dataset, req.config)).await?;
    Ok((StatusCode::CREATED, Json(state)).into_response())
}

async fn get_session(State(store): State<Store>, Path(id): Path<String>) -> ApiResult<Json<SessionState>> {
    blocking(move || store.get(&id)).await.map(Json)
}

async fn get_generation(
    State(store): State<Store>,
    Path((id, index)): Path<(String, String)>,
) -> ApiResult<Json<GenerationListing>> {
    let i: usize = index
        .parse()
        .map_err(|_| ServiceError::UnknownGeneration(index.clone()))?;
    let g = blocking({
        let id = id.clone();
        move || store.generation(&id, i)
    })
    .await?;
    let shapes = g
        .entries
        .into_iter()
        .enumerate()
        .map(|(rank, entry)| {
            let r = shape_ref(&id, i, &entry.id);
            ListingEntry {
                rank,
                mesh: format!("/v1/shapes/{r}.obj"),
                thumbnail: format!("/v1/shapes/{r}/thumb.png"),
                entry,
            }
        })
        .collect();
    Ok(Json(GenerationListing {
        session_id: id,
        index: g.index,
        produced: g.produced,
        labels: g.labels.into_iter().collect(),
        selected: g.selected,
        shapes,
    }))
}

/// Accepts the request and breeds in the background; the response carries
/// status `Evolving`.
async fn advance(
    State(store): State<Store>,
    Path(id): Path<String>,
    payload: Result<Json<AdvanceRequest>, JsonRejection>,
) -> ApiResult<Response> {
    let req = body(payload)?;
    let job = {
        let store = store.clone();
        blocking(move || store.begin_advance(&id, req.selected, req.labels)).await?
    };
    let state = store.get(&job.session_id)?;
    tokio::task::spawn_blocking(move || {
        if let Err(e) = store.run_advance(job) {
            tracing::error!(error = %e, "could not record advance outcome");
        }
    });
    Ok((StatusCode::ACCEPTED, Json(state)).into_response())
}

async fn get_mesh(State(store): State<Store>, Path(file): Path<String>) -> ApiResult<Response> {
    let shape = file
        .strip_suffix(".obj")
        .ok_or_else(|| ServiceError::UnknownShapeId(file.clone()))?
        .to_owned();
    let bytes = blocking(move || {
        let path = store.shape_path(&shape)?;
        std::fs::read(path).map_err(ServiceError::internal)
    })
    .await?;
    Ok(([(header::CONTENT_TYPE, "model/obj")], bytes).into_response())
}

async fn get_thumbnail(State(store): State<Store>, Path(shape): Path<String>) -> ApiResult<Response> {
    let png = blocking(move || {
        let path = store.shape_path(&shape)?;
        let shape = load_shape(&path).map_err(ServiceError::internal)?;
        Ok(thumb::thumbnail_png(&shape))
    })
    .await?;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

async fn not_found() -> ServiceError {
    ServiceError::NoRoute
}

pub fn router(store: Arc<SessionStore>) -> Router {
    let v1 = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/generations/{index}", get(get_generation))
        .route("/sessions/{id}/advance", post(advance))
        .route("/shapes/{file}", get(get_mesh))
        .route("/shapes/{shape}/thumb.png", get(get_thumbnail));
    Router::new().nest("/v1", v1).fallback(not_found).with_state(store)
}

pub async fn serve(addr: SocketAddr, store: Arc<SessionStore>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(store)).await
}
