use std::future::Future;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{any, get, post};
use axum::{Json, Router};
use serde::Deserialize;
use tower_http::services::ServeDir;

use crate::store::to_ndjson;
use crate::{EvalService, ServiceError};

type Shared = Arc<EvalService>;

/// Runs blocking service work (store fsyncs, file reads) off the async workers.
async fn blocking<T, F>(svc: &Shared, f: F) -> Result<T, ServiceError>
where
    T: Send + 'static,
    F: FnOnce(&EvalService) -> Result<T, ServiceError> + Send + 'static,
{
    let svc = Arc::clone(svc);
    tokio::task::spawn_blocking(move || f(&svc))
        .await
        .map_err(|e| ServiceError::BadRequest(format!("worker failed: {e}")))?
}

fn bearer(headers: &HeaderMap) -> Result<String, ServiceError> {
    headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .map(|t| t.trim().to_string())
        .ok_or(ServiceError::Unauthorized)
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ServiceError> {
    serde_json::from_slice(body).map_err(|e| ServiceError::BadRequest(e.to_string()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    annotator_id: String,
    #[serde(default)]
    seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Submit {
    index: i64,
    score: i64,
}

async fn create_session(State(svc): State<Shared>, body: Bytes) -> Result<Response, ServiceError> {
    let req: CreateSession = parse_body(&body)?;
    let info = blocking(&svc, move |s| s.create_session(&req.annotator_id, req.seed)).await?;
    let status = if info.resumed { StatusCode::OK } else { StatusCode::CREATED };
    Ok((status, Json(info)).into_response())
}

async fn next_item(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> Result<Response, ServiceError> {
    let token = bearer(&headers)?;
    Ok(Json(svc.next_item(&id, &token)?).into_response())
}

async fn item(
    State(svc): State<Shared>,
    Path((id, index)): Path<(String, i64)>,
    headers: HeaderMap,
) -> Result<Response, ServiceError> {
    let token = bearer(&headers)?;
    Ok(Json(svc.item(&id, &token, index)?).into_response())
}

async fn submit(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, ServiceError> {
    let token = bearer(&headers)?;
    let req: Submit = parse_body(&body)?;
    let ack = blocking(&svc, move |s| s.submit_score(&id, &token, req.index, req.score)).await?;
    Ok(Json(ack).into_response())
}

/// Parses a single `bytes=` range against a body of `len` bytes.
///
/// `Ok(None)` means "send the whole body": no header, a malformed header, or
/// a multi-range request.
pub fn parse_range(value: Option<&str>, len: u64) -> Result<Option<(u64, u64)>, ServiceError> {
    let Some(spec) = value.and_then(|v| v.trim().strip_prefix("bytes=")) else {
        return Ok(None);
    };
    if spec.contains(',') {
        return Ok(None);
    }
    let Some((start, end)) = spec.split_once('-') else {
        return Ok(None);
    };
    let (start, end) = (start.trim(), end.trim());
    let range = if start.is_empty() {
        let Ok(suffix) = end.parse::<u64>() else { return Ok(None) };
        if suffix == 0 || len == 0 {
            return Err(ServiceError::RangeNotSatisfiable { len });
        }
        (len.saturating_sub(suffix), len - 1)
    } else {
        let Ok(first) = start.parse::<u64>() else { return Ok(None) };
        let last = if end.is_empty() {
            len.saturating_sub(1)
        } else {
            let Ok(last) = end.parse::<u64>() else { return Ok(None) };
            if last < first {
                return Ok(None);
            }
            last.min(len.saturating_sub(1))
        };
        if first >= len {
            return Err(ServiceError::RangeNotSatisfiable { len });
        }
        (first, last)
    };
    Ok(Some(range))
}

async fn clip(
    State(svc): State<Shared>,
    Path(locator): Path<String>,
    headers: HeaderMap,
) -> Result<Response, ServiceError> {
    let path = svc.clip_path(&locator)?;
    let bytes = tokio::task::spawn_blocking(move || std::fs::read(&path))
        .await
        .map_err(|e| ServiceError::BadRequest(format!("worker failed: {e}")))?
        .map_err(|_| ServiceError::NotFound)?;
    let len = bytes.len() as u64;
    let range = parse_range(
        headers.get(header::RANGE).and_then(|v| v.to_str().ok()),
        len,
    )?;
    let mut resp = match range {
        Some((a, b)) => {
            let mut r = (StatusCode::PARTIAL_CONTENT, bytes[a as usize..=b as usize].to_vec()).into_response();
            if let Ok(v) = HeaderValue::from_str(&format!("bytes {a}-{b}/{len}")) {
                r.headers_mut().insert(header::CONTENT_RANGE, v);
            }
            r
        }
        None => (StatusCode::OK, bytes).into_response(),
    };
    let h = resp.headers_mut();
    h.insert(header::CONTENT_TYPE, HeaderValue::from_static("audio/wav"));
    h.insert(header::ACCEPT_RANGES, HeaderValue::from_static("bytes"));
    h.insert(header::CACHE_CONTROL, HeaderValue::from_static("private, max-age=3600"));
    Ok(resp)
}

async fn export(State(svc): State<Shared>, headers: HeaderMap) -> Result<Response, ServiceError> {
    svc.check_admin(&bearer(&headers)?)?;
    let ratings = blocking(&svc, |s| s.export()).await?;
    Ok((
        [(header::CONTENT_TYPE, HeaderValue::from_static("application/x-ndjson"))],
        to_ndjson(&ratings),
    )
        .into_response())
}

async fn rubric(State(svc): State<Shared>) -> Response {
    Json(svc.rubric().entries().to_vec()).into_response()
}

async fn health() -> Response {
    Json(serde_json::json!({ "status": "ok" })).into_response()
}

async fn fallback() -> ServiceError {
    ServiceError::NotFound
}

fn api() -> Router<Shared> {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/rubric", get(rubric))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}/next", get(next_item))
        .route("/api/sessions/{id}/items/{index}", get(item))
        .route("/api/sessions/{id}/scores", post(submit))
        .route("/api/clips/{locator}", get(clip))
        .route("/api/export", get(export))
}

pub fn router(svc: Shared) -> Router {
    api().fallback(fallback).with_state(svc)
}

/// The API plus static files from `dir` for every non-API path. Unknown
/// API paths still get the JSON error body.
pub fn router_with_static(svc: Shared, dir: impl AsRef<std::path::Path>) -> Router {
    api()
        .route("/api/{*rest}", any(fallback))
        .fallback_service(ServeDir::new(dir.as_ref()).append_index_html_on_directories(true))
        .with_state(svc)
}

/// Serves the API on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    svc: Shared,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    serve_app(listener, router(svc), shutdown).await
}

/// Like [`serve`] for a prebuilt router.
pub async fn serve_app(
    listener: tokio::net::TcpListener,
    app: Router,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}
