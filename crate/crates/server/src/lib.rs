//! HTTP front end for a [`Store`].
//!
//! | route | answer |
//! |---|---|
//! | `GET /docs` | `[{doc_id, kind, revision}]` |
//! | `GET /docs/{id}` | AIF payload, `X-Revision` header |
//! | `PUT /docs/{id}?kind=K` | 201 `{doc_id, kind, revision: 0}`; body is an optional AIF payload |
//! | `POST /docs/{id}/edits` | `{op, args, base_revision}` → 200 `{revision, result}`, 409 stale, 422 `{code, detail}` |
//! | `GET /docs/{id}/validate` | `[{graph, code, ids}]` |
//!
//! Edits to one document run one at a time in arrival order. Reads never
//! wait on edits of other documents.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use agkit_core::formats::parse_aif_lenient;
use agkit_core::{DocKind, EditCommand, Store, StoreError};
use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

pub const REVISION_HEADER: &str = "x-revision";

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("cannot bind {addr}: {source}")]
    BindFailure { addr: String, source: std::io::Error },
    #[error("server failed: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone)]
struct AppState {
    store: Arc<Store>,
    // FIFO gate per document so queued edits commit in arrival order
    queues: Arc<Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>>,
}

impl AppState {
    fn queue(&self, id: &str) -> Arc<tokio::sync::Mutex<()>> {
        self.queues.lock().expect("queue map").entry(id.to_string()).or_default().clone()
    }
}

struct ApiError(StatusCode, String, String);

impl ApiError {
    fn new(status: StatusCode, code: &str, detail: impl Into<String>) -> Self {
        ApiError(status, code.to_string(), detail.into())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match &e {
            StoreError::UnknownDocument(_) => StatusCode::NOT_FOUND,
            StoreError::RevisionConflict { .. } | StoreError::AlreadyExists(_) => StatusCode::CONFLICT,
            StoreError::BadId(_) => StatusCode::BAD_REQUEST,
            StoreError::InvalidPayload(_) | StoreError::Edit(_) => StatusCode::UNPROCESSABLE_ENTITY,
            StoreError::Io(_) | StoreError::CorruptMeta(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.code().to_string(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "code": self.1, "detail": self.2 }))).into_response()
    }
}

pub fn router(store: Arc<Store>) -> Router {
    let state = AppState { store, queues: Arc::default() };
    Router::new()
        .route("/docs", get(list_docs))
        .route("/docs/{id}", get(get_doc).put(put_doc))
        .route("/docs/{id}/edits", post(post_edit))
        .route("/docs/{id}/validate", get(validate_doc))
        .with_state(state)
}

/// Binds `addr` and serves until the process ends.
pub async fn serve(store: Arc<Store>, addr: &str) -> Result<(), ServeError> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServeError::BindFailure { addr: addr.to_string(), source })?;
    axum::serve(listener, router(store)).await?;
    Ok(())
}

/// Binds and serves in the background; returns the bound address.
pub async fn spawn(store: Arc<Store>, addr: &str) -> Result<SocketAddr, ServeError> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServeError::BindFailure { addr: addr.to_string(), source })?;
    let local = listener.local_addr()?;
    tokio::spawn(async move {
        let _ = axum::serve(listener, router(store)).await;
    });
    Ok(local)
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))
}

async fn list_docs(State(st): State<AppState>) -> Result<Json<Value>, ApiError> {
    let store = st.store.clone();
    let docs = blocking(move || store.list()).await?;
    Ok(Json(json!(docs)))
}

async fn get_doc(State(st): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let store = st.store.clone();
    let rec = blocking(move || store.load(&id)).await??;
    let mut res = rec.payload.into_response();
    let headers = res.headers_mut();
    headers.insert(header::CONTENT_TYPE, HeaderValue::from_static("application/xml"));
    headers.insert(REVISION_HEADER, HeaderValue::from(rec.revision));
    Ok(res)
}

#[derive(Deserialize)]
struct KindQuery {
    kind: Option<String>,
}

async fn put_doc(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<KindQuery>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let kind: DocKind = q
        .kind
        .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "BadRequest", "missing ?kind="))?
        .parse()
        .map_err(|e: String| ApiError::new(StatusCode::BAD_REQUEST, "BadRequest", e))?;
    let payload = if body.iter().all(u8::is_ascii_whitespace) {
        None
    } else {
        Some(
            String::from_utf8(body.to_vec())
                .map_err(|_| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "MalformedXml", "payload is not UTF-8"))?,
        )
    };
    let store = st.store.clone();
    let summary = blocking(move || store.create(&id, kind, payload)).await??;
    Ok((StatusCode::CREATED, Json(json!(summary))).into_response())
}

async fn post_edit(State(st): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let cmd: EditCommand = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "BadRequest", e.to_string()))?;
    if cmd.base_revision.is_none() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "BadRequest", "base_revision is required"));
    }
    let queue = st.queue(&id);
    let _turn = queue.lock().await;
    let store = st.store.clone();
    let out = blocking(move || store.apply_edit(&id, &cmd)).await??;
    Ok(Json(json!({ "revision": out.revision, "result": out.result })).into_response())
}

async fn validate_doc(State(st): State<AppState>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let store = st.store.clone();
    let rec = blocking(move || store.load(&id)).await??;
    let set = parse_aif_lenient(&rec.payload).map_err(|e| ApiError::from(StoreError::InvalidPayload(e)))?;
    let mut out = Vec::new();
    for g in &set.graphs {
        for v in g.validate().violations {
            out.push(json!({ "graph": g.id, "code": v.code.to_string(), "ids": v.ids }));
        }
    }
    Ok(Json(Value::Array(out)))
}
