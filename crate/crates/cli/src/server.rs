//! HTTP and WebSocket front end over a [`SessionManager`].
//!
//! | route | |
//! |---|---|
//! | `POST /sessions` | multipart CSV upload or `{"path": ..., "text_columns": [...]}` |
//! | `POST /sessions/{id}/apply` | `{"source": "json" \| "command", "payload": ...}` |
//! | `GET /sessions/{id}/table?offset&limit` | current (filtered) table page |
//! | `GET /sessions/{id}/viz` | every chart as Vega-Lite |
//! | `GET /sessions/{id}/history` | version tree and head |
//! | `POST /sessions/{id}/checkout` | `{"version_id": n}` |
//! | `GET /sessions/{id}/events` | WebSocket stream of coordination effects |
//!
//! Failures use the envelope `{"error": {"stage", "kind", "message"}}`.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{FromRequest, Multipart, Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tokio::sync::mpsc;

use vita_core::coord::Effect;
use vita_core::load::LoadOptions;
use vita_core::session::{SessionManager, Source, DELTA_PAGE_ROWS};
use vita_core::{VersionError, VitaError};

pub type Shared = Arc<SessionManager>;

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub stage: &'static str,
    pub kind: String,
    pub message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        Self { status: StatusCode::BAD_REQUEST, stage: "request", kind: "BadRequest".into(), message: message.into() }
    }
}

impl From<VitaError> for ApiError {
    fn from(e: VitaError) -> Self {
        let status = match &e {
            VitaError::Spec(_) | VitaError::Compile(_) | VitaError::Engine(_) => StatusCode::UNPROCESSABLE_ENTITY,
            VitaError::UnknownSession(_) | VitaError::Version(VersionError::UnknownVersion(_)) => StatusCode::NOT_FOUND,
            VitaError::Load(_) | VitaError::Range(_) => StatusCode::BAD_REQUEST,
            VitaError::Version(VersionError::Storage(_)) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self { status, stage: e.stage(), kind: e.kind().to_string(), message: e.to_string() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": {"stage": self.stage, "kind": self.kind, "message": self.message}});
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Runs session work off the async workers; sessions use blocking locks.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, VitaError> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError { status: StatusCode::INTERNAL_SERVER_ERROR, stage: "server", kind: "Panic".into(), message: e.to_string() })?
        .map_err(ApiError::from)
}

fn parse_body<T: for<'de> Deserialize<'de>>(bytes: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(bytes).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

pub fn router(manager: Shared) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/apply", post(apply))
        .route("/sessions/{id}/table", get(table))
        .route("/sessions/{id}/viz", get(visualizations))
        .route("/sessions/{id}/history", get(history))
        .route("/sessions/{id}/checkout", post(checkout))
        .route("/sessions/{id}/events", get(events))
        .with_state(manager)
}

pub async fn serve(addr: SocketAddr, session_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("vita listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(SessionManager::new(session_dir)))).await
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TextColumns {
    List(Vec<String>),
    Csv(String),
}

impl TextColumns {
    fn into_vec(self) -> Vec<String> {
        match self {
            TextColumns::List(v) => v,
            TextColumns::Csv(s) => split_columns(&s),
        }
    }
}

fn split_columns(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|c| !c.is_empty()).map(str::to_string).collect()
}

#[derive(Deserialize)]
struct CreateFromPath {
    path: PathBuf,
    text_columns: Option<TextColumns>,
}

enum CsvSource {
    Path(PathBuf),
    Bytes(Vec<u8>),
}

async fn create_session(State(mgr): State<Shared>, req: Request) -> ApiResult<impl IntoResponse> {
    let multipart = req
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("multipart/form-data"));
    let (source, text_columns) = if multipart {
        let mut form = Multipart::from_request(req, &()).await.map_err(|e| ApiError::bad_request(e.to_string()))?;
        let (mut csv, mut cols) = (None, Vec::new());
        while let Some(field) = form.next_field().await.map_err(|e| ApiError::bad_request(e.to_string()))? {
            let name = field.name().unwrap_or_default().to_string();
            let data = field.bytes().await.map_err(|e| ApiError::bad_request(e.to_string()))?;
            if name == "text_columns" {
                cols = split_columns(&String::from_utf8_lossy(&data));
            } else {
                csv = Some(data.to_vec());
            }
        }
        (CsvSource::Bytes(csv.ok_or_else(|| ApiError::bad_request("multipart body has no CSV file part"))?), cols)
    } else {
        let bytes = Bytes::from_request(req, &()).await.map_err(|e| ApiError::bad_request(e.to_string()))?;
        let body: CreateFromPath = parse_body(&bytes)?;
        (CsvSource::Path(body.path), body.text_columns.map(TextColumns::into_vec).unwrap_or_default())
    };
    let opts = LoadOptions::default().with_text_columns(text_columns);
    let (id, rows) = blocking(move || {
        let id = match source {
            CsvSource::Path(p) => mgr.create_from_path(&p, &opts)?,
            CsvSource::Bytes(b) => mgr.create_from_bytes(&b, &opts)?,
        };
        let rows = mgr.with(&id, |s| s.state().frame.row_count())?;
        Ok((id, rows))
    })
    .await?;
    Ok((StatusCode::CREATED, Json(json!({"session_id": id, "version_id": 0, "rows": rows}))))
}

#[derive(Deserialize)]
struct ApplyRequest {
    source: String,
    payload: serde_json::Value,
}

async fn apply(State(mgr): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let req: ApplyRequest = parse_body(&body)?;
    let source = Source::parse(&req.source)
        .ok_or_else(|| ApiError::bad_request(format!("source must be \"json\" or \"command\", got {:?}", req.source)))?;
    let payload = match req.payload {
        serde_json::Value::String(s) => s,
        other if source == Source::Json => other.to_string(),
        _ => return Err(ApiError::bad_request("command payload must be a string")),
    };
    let response = blocking(move || mgr.with(&id, |s| s.apply(source, &payload))?).await?;
    Ok(Json(response))
}

async fn table(
    State(mgr): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<impl IntoResponse> {
    let number = |key: &str, default: usize| -> ApiResult<usize> {
        q.get(key)
            .map(|v| v.parse().map_err(|_| ApiError::bad_request(format!("`{key}` must be a non-negative integer"))))
            .unwrap_or(Ok(default))
    };
    let (offset, limit) = (number("offset", 0)?, number("limit", DELTA_PAGE_ROWS)?);
    let page = blocking(move || mgr.with(&id, |s| s.table(offset, limit))?).await?;
    Ok(Json(page))
}

async fn visualizations(State(mgr): State<Shared>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(move || mgr.with(&id, |s| s.visualizations())).await?))
}

async fn history(State(mgr): State<Shared>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let body = blocking(move || mgr.with(&id, |s| json!({"head": s.head(), "versions": s.history()}))).await?;
    Ok(Json(body))
}

#[derive(Deserialize)]
struct CheckoutRequest {
    version_id: u64,
}

async fn checkout(State(mgr): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let req: CheckoutRequest = parse_body(&body)?;
    Ok(Json(blocking(move || mgr.with(&id, |s| s.checkout(req.version_id))?).await?))
}

async fn events(State(mgr): State<Shared>, Path(id): Path<String>, ws: WebSocketUpgrade) -> ApiResult<Response> {
    // subscribe before the handshake completes so no effect is missed
    let (tx, rx) = mpsc::unbounded_channel::<Effect>();
    blocking(move || mgr.with(&id, |s| s.subscribe_with(move |e| tx.send(e.clone()).is_ok()))).await?;
    Ok(ws.on_upgrade(move |socket| forward(socket, rx)))
}

async fn forward(mut socket: WebSocket, mut rx: mpsc::UnboundedReceiver<Effect>) {
    loop {
        tokio::select! {
            effect = rx.recv() => {
                let Some(effect) = effect else { break };
                let text = serde_json::to_string(&effect).expect("effects serialize");
                if socket.send(Message::Text(text.into())).await.is_err() {
                    break;
                }
            }
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => {}
            },
        }
    }
}
