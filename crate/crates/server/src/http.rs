//! HTTP and WebSocket routes.

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{ConnectInfo, Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::net::TcpListener;
use tokio::sync::broadcast::error::RecvError;
use tracing::info;

use danmaku_mod_core::engine::AdminSettings;
use danmaku_mod_core::ingest::{encode_event, StreamEvent};

use crate::ratelimit::RateLimiter;
use crate::service::{RegisterVideo, Service, ServiceError, SubmitDanmaku};

const MAX_POLL_MS: u64 = 60_000;
const DEFAULT_POLL_MS: u64 = 25_000;

#[derive(Clone)]
pub struct AppState {
    service: Service,
    limiter: Arc<RateLimiter<SocketAddr>>,
}

impl AppState {
    pub fn new(service: Service) -> Self {
        let limit = service.config().rate_limit_per_s;
        Self {
            service,
            limiter: Arc::new(RateLimiter::new(limit)),
        }
    }
}

pub struct ApiError(ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code) = match &self.0 {
            ServiceError::UnknownVideo(_) => (StatusCode::NOT_FOUND, "UnknownVideo"),
            ServiceError::DuplicateVideoId(_) => (StatusCode::CONFLICT, "DuplicateVideoId"),
            ServiceError::ParseError(_) => (StatusCode::BAD_REQUEST, "ParseError"),
            ServiceError::EmptyText => (StatusCode::BAD_REQUEST, "EmptyText"),
            ServiceError::RateLimited => (StatusCode::TOO_MANY_REQUESTS, "RateLimited"),
            ServiceError::InvalidSettings(_) => (StatusCode::BAD_REQUEST, "InvalidSettings"),
            ServiceError::Unauthorized => (StatusCode::UNAUTHORIZED, "Unauthorized"),
            ServiceError::InvalidRequest(_) => (StatusCode::BAD_REQUEST, "InvalidRequest"),
            ServiceError::Store(_) | ServiceError::Resource(_) => {
                (StatusCode::INTERNAL_SERVER_ERROR, "Internal")
            }
        };
        let mut body = json!({ "error": code, "message": self.0.to_string() });
        if let ServiceError::InvalidSettings(fields) = &self.0 {
            body["fields"] = json!(fields);
        }
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ServiceError> {
    serde_json::from_slice(body).map_err(|e| ServiceError::InvalidRequest(e.to_string()))
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers
        .get(header::AUTHORIZATION)?
        .to_str()
        .ok()?
        .strip_prefix("Bearer ")
}

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, ServiceError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(ServiceError::InvalidRequest(format!("task failed: {e}"))))?
        .map_err(ApiError)
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/api/videos", get(list_videos).post(register_video))
        .route("/api/videos/{id}", get(get_video))
        .route("/api/videos/{id}/danmaku", get(list_danmaku).post(submit_danmaku))
        .route("/api/videos/{id}/settings", get(get_settings).put(put_settings))
        .route("/api/videos/{id}/captions", get(get_captions))
        .route("/api/videos/{id}/events", get(poll_events))
        .route("/api/videos/{id}/fit", post(fit_model))
        .route("/ws/videos/{id}", get(ws_upgrade))
        .with_state(state)
}

async fn healthz(State(s): State<AppState>) -> impl IntoResponse {
    Json(s.service.health())
}

async fn list_videos(State(s): State<AppState>) -> impl IntoResponse {
    Json(s.service.list_videos())
}

async fn register_video(
    State(s): State<AppState>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<(StatusCode, Json<serde_json::Value>), ApiError> {
    s.service.check_token(bearer(&headers))?;
    let req: RegisterVideo = parse_body(&body)?;
    let service = s.service.clone();
    let info = blocking(move || service.register_video(req)).await?;
    Ok((StatusCode::CREATED, Json(json!(info))))
}

async fn get_video(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<serde_json::Value> {
    Ok(Json(json!(s.service.get_video(&id)?)))
}

#[derive(Debug, Deserialize)]
struct RangeQuery {
    from_ms: Option<u64>,
    to_ms: Option<u64>,
}

async fn list_danmaku(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<RangeQuery>,
) -> ApiResult<serde_json::Value> {
    Ok(Json(json!(s.service.danmaku(&id, q.from_ms, q.to_ms)?)))
}

async fn submit_danmaku(
    State(s): State<AppState>,
    ConnectInfo(peer): ConnectInfo<SocketAddr>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<(StatusCode, Json<serde_json::Value>), ApiError> {
    s.service.get_video(&id)?;
    if !s.limiter.check(&peer) {
        return Err(ServiceError::RateLimited.into());
    }
    let req: SubmitDanmaku = parse_body(&body)?;
    let service = s.service.clone();
    let ack = blocking(move || service.submit_danmaku(&id, req)).await?;
    Ok((StatusCode::CREATED, Json(json!(ack))))
}

async fn get_settings(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<AdminSettings> {
    Ok(Json(s.service.get_settings(&id)?))
}

async fn put_settings(
    State(s): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<AdminSettings> {
    s.service.check_token(bearer(&headers))?;
    s.service.get_video(&id)?;
    let text = std::str::from_utf8(&body).map_err(|e| ServiceError::InvalidRequest(e.to_string()))?;
    let settings = AdminSettings::from_json(text).map_err(ServiceError::InvalidSettings)?;
    let service = s.service.clone();
    Ok(Json(blocking(move || service.put_settings(&id, settings)).await?))
}

async fn get_captions(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<RangeQuery>,
) -> ApiResult<serde_json::Value> {
    let captions = s.service.captions(&id, q.from_ms, q.to_ms)?;
    let out: Vec<serde_json::Value> = captions
        .into_iter()
        .map(|c| {
            let art = s.service.bubble_art(&c);
            let mut v = json!(c);
            if let Some(url) = art {
                v["bubble_image_url"] = json!(url);
            }
            v
        })
        .collect();
    Ok(Json(json!(out)))
}

async fn fit_model(
    State(s): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> ApiResult<serde_json::Value> {
    s.service.check_token(bearer(&headers))?;
    let service = s.service.clone();
    Ok(Json(json!(blocking(move || service.fit_model(&id)).await?)))
}

#[derive(Debug, Deserialize)]
struct PollQuery {
    #[serde(default)]
    from_seq: u64,
    timeout_ms: Option<u64>,
}

#[derive(Debug, Serialize)]
struct PollResponse {
    events: Vec<StreamEvent>,
    next_seq: u64,
}

/// Long-poll fallback for the stream endpoint.
async fn poll_events(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<PollQuery>,
) -> ApiResult<PollResponse> {
    let (backlog, mut rx, next) = s.service.subscribe(&id, Some(q.from_seq))?;
    if !backlog.is_empty() {
        return Ok(Json(PollResponse { events: backlog, next_seq: next }));
    }
    let wait = Duration::from_millis(q.timeout_ms.unwrap_or(DEFAULT_POLL_MS).min(MAX_POLL_MS));
    let _ = tokio::time::timeout(wait, rx.recv()).await;
    let (events, next_seq) = s.service.events_since(&id, q.from_seq)?;
    Ok(Json(PollResponse { events, next_seq }))
}

#[derive(Debug, Deserialize)]
struct WsQuery {
    from_seq: Option<u64>,
}

async fn ws_upgrade(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<WsQuery>,
    ws: WebSocketUpgrade,
) -> Result<Response, ApiError> {
    s.service.get_video(&id)?;
    Ok(ws.on_upgrade(move |socket| stream_events(socket, s.service, id, q.from_seq)))
}

async fn send_event(socket: &mut WebSocket, event: &StreamEvent) -> bool {
    socket
        .send(Message::Text(encode_event(event).into()))
        .await
        .is_ok()
}

async fn stream_events(mut socket: WebSocket, service: Service, id: String, from_seq: Option<u64>) {
    let Ok((backlog, mut rx, next)) = service.subscribe(&id, from_seq) else {
        return;
    };
    // First seq not yet delivered.
    let mut cursor = from_seq.map_or(next, |f| f.min(next));
    for event in &backlog {
        if !send_event(&mut socket, event).await {
            return;
        }
        cursor = event.seq() + 1;
    }
    let heartbeat = Duration::from_secs(service.config().heartbeat_s.max(1));
    loop {
        tokio::select! {
            received = rx.recv() => match received {
                Ok(event) => {
                    if event.seq() >= cursor {
                        if !send_event(&mut socket, &event).await {
                            return;
                        }
                        cursor = event.seq() + 1;
                    }
                }
                Err(RecvError::Lagged(_)) => {
                    let Ok((events, _)) = service.events_since(&id, cursor) else { return };
                    for event in &events {
                        if !send_event(&mut socket, event).await {
                            return;
                        }
                        cursor = event.seq() + 1;
                    }
                }
                Err(RecvError::Closed) => return,
            },
            _ = tokio::time::sleep(heartbeat) => {
                if !send_event(&mut socket, &StreamEvent::heartbeat(cursor.saturating_sub(1))).await {
                    return;
                }
            }
            incoming = socket.recv() => match incoming {
                None | Some(Err(_)) | Some(Ok(Message::Close(_))) => return,
                Some(Ok(_)) => {}
            },
        }
    }
}

/// Binds and serves until the future is dropped or ctrl-c.
pub async fn serve(service: Service, addr: SocketAddr) -> std::io::Result<()> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    info!(%local, "listening");
    // Printed for scripts and tests that start the server on port 0.
    println!("listening on {local}");
    let app = router(AppState::new(service));
    axum::serve(listener, app.into_make_service_with_connect_info::<SocketAddr>())
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// Starts the server on an ephemeral port in the current runtime.
pub async fn spawn(service: Service) -> std::io::Result<(SocketAddr, tokio::task::JoinHandle<()>)> {
    let listener = TcpListener::bind(("127.0.0.1", 0)).await?;
    let addr = listener.local_addr()?;
    let app = router(AppState::new(service));
    let handle = tokio::spawn(async move {
        let _ = axum::serve(listener, app.into_make_service_with_connect_info::<SocketAddr>()).await;
    });
    Ok((addr, handle))
}
