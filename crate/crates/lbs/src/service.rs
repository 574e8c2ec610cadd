//! Local HTTP front end: `POST /query` and `GET /health`.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use geoind_core::RngStream;
use serde_json::json;

use crate::error::LbsError;
use crate::proxy::{LbsQuery, LbsResponse, Proxy};

pub struct ServiceState {
    proxy: Proxy,
    base: RngStream,
    next_id: AtomicU64,
}

impl ServiceState {
    pub fn new(proxy: Proxy, seed: u64) -> Arc<Self> {
        Arc::new(ServiceState {
            proxy,
            base: RngStream::new(seed),
            next_id: AtomicU64::new(0),
        })
    }

    pub fn proxy(&self) -> &Proxy {
        &self.proxy
    }

    /// Answer a query on the stream `fork(request_id)`. Queries without an
    /// id draw one from a counter.
    pub fn answer(&self, q: &LbsQuery) -> Result<LbsResponse, LbsError> {
        let id = q
            .request_id
            .unwrap_or_else(|| self.next_id.fetch_add(1, Ordering::Relaxed));
        self.proxy.query(q, &mut self.base.fork(id))
    }
}

impl IntoResponse for LbsError {
    fn into_response(self) -> Response {
        let status = match &self {
            LbsError::Core(_) | LbsError::InvalidQuery(_) => StatusCode::UNPROCESSABLE_ENTITY,
            LbsError::Transport { .. } | LbsError::MalformedResponse(_) => StatusCode::BAD_GATEWAY,
            LbsError::Parse { .. } | LbsError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({ "error": self.to_string() }))).into_response()
    }
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

async fn query(
    State(state): State<Arc<ServiceState>>,
    Json(q): Json<LbsQuery>,
) -> Result<Json<LbsResponse>, LbsError> {
    // the provider may block on network i/o
    let resp = tokio::task::spawn_blocking(move || state.answer(&q))
        .await
        .map_err(|e| LbsError::Io(std::io::Error::other(e)))??;
    Ok(Json(resp))
}

pub fn router(state: Arc<ServiceState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/query", post(query))
        .with_state(state)
}

pub async fn serve(addr: SocketAddr, state: Arc<ServiceState>) -> std::io::Result<()> {
    serve_on(tokio::net::TcpListener::bind(addr).await?, state).await
}

/// Serve on an already bound listener (e.g. port 0).
pub async fn serve_on(listener: tokio::net::TcpListener, state: Arc<ServiceState>) -> std::io::Result<()> {
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state)).await
}
