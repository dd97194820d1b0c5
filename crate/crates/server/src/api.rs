//! Route handlers for the JSON/PNG protocol.

use std::sync::{Arc, LazyLock};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};
use sha2::{Digest, Sha256};

use plotwire_core::plot::{capabilities, GraphicsPoint, NavAction, PlotSpec, RenderOptions, ViewState, Viewport};
use plotwire_core::session::{IdentifiedRow, SessionManager};
use plotwire_core::table::{CellValue, ColumnKind};

use crate::error::{ApiError, ErrorCode};

pub const DEFAULT_WIDTH: u32 = 640;
pub const DEFAULT_HEIGHT: u32 = 480;

pub type AppState = Arc<SessionManager>;

pub fn routes() -> Router<AppState> {
    Router::new()
        .route("/api/capabilities", get(get_capabilities))
        .route("/api/tables", get(list_tables))
        .route("/api/sessions", axum::routing::post(create_session))
        .route("/api/sessions/{id}", axum::routing::delete(delete_session))
        .route("/api/sessions/{id}/frame", get(frame))
        .route("/api/sessions/{id}/nav", axum::routing::post(navigate))
        .route("/api/sessions/{id}/identify", get(identify))
        .route("/metrics", get(metrics))
}

fn bad_request<E: std::fmt::Display>(e: E) -> ApiError {
    ApiError::new(ErrorCode::Format, e.to_string())
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(ErrorCode::Internal, format!("worker failed: {e}")))?
}

struct Capabilities {
    body: Vec<u8>,
    etag: String,
}

static CAPABILITIES: LazyLock<Capabilities> = LazyLock::new(|| {
    let body = serde_json::to_vec(capabilities()).expect("capabilities serialize");
    let digest = Sha256::digest(&body);
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    Capabilities {
        body,
        etag: format!("\"{hex}\""),
    }
});

async fn get_capabilities(headers: HeaderMap) -> Response {
    let caps = &*CAPABILITIES;
    let etag = HeaderValue::from_str(&caps.etag).expect("hex etag");
    let matches = headers
        .get(header::IF_NONE_MATCH)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.split(',').any(|t| t.trim() == caps.etag || t.trim() == "*"));
    if matches {
        return (StatusCode::NOT_MODIFIED, [(header::ETAG, etag)]).into_response();
    }
    (
        [
            (header::CONTENT_TYPE, HeaderValue::from_static("application/json")),
            (header::ETAG, etag),
        ],
        caps.body.clone(),
    )
        .into_response()
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct TableSummary {
    name: String,
    row_count: usize,
    columns: Vec<ColumnSummary>,
}

#[derive(Serialize)]
struct ColumnSummary {
    name: String,
    kind: ColumnKind,
}

async fn list_tables(State(state): State<AppState>) -> Json<Vec<TableSummary>> {
    let tables = state
        .registry()
        .list()
        .into_iter()
        .map(|t| TableSummary {
            name: t.table.name().to_string(),
            row_count: t.table.row_count(),
            columns: t
                .table
                .columns()
                .iter()
                .map(|c| ColumnSummary {
                    name: c.name().to_string(),
                    kind: c.kind(),
                })
                .collect(),
        })
        .collect();
    Json(tables)
}

#[derive(Deserialize)]
struct CreateRequest {
    table: String,
    spec: PlotSpec,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SessionResponse {
    session_id: String,
    seq: u64,
    view: ViewState,
}

async fn create_session(
    State(state): State<AppState>,
    body: Result<Json<CreateRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionResponse>), ApiError> {
    let Json(req) = body.map_err(bad_request)?;
    let info = blocking(move || Ok(state.create_session(&req.table, &req.spec)?)).await?;
    Ok((
        StatusCode::CREATED,
        Json(SessionResponse {
            session_id: info.session_id,
            seq: info.seq,
            view: info.view,
        }),
    ))
}

async fn delete_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    state.delete(&id)?;
    Ok(StatusCode::NO_CONTENT)
}

fn viewport(w: Option<u32>, h: Option<u32>) -> Result<Viewport, ApiError> {
    Ok(Viewport::new(w.unwrap_or(DEFAULT_WIDTH), h.unwrap_or(DEFAULT_HEIGHT))?)
}

#[derive(Deserialize)]
struct FrameQuery {
    w: Option<u32>,
    h: Option<u32>,
    #[serde(default)]
    bare: Option<String>,
}

fn parse_flag(v: Option<&str>) -> Result<bool, ApiError> {
    match v {
        None | Some("") | Some("false") | Some("0") => Ok(false),
        Some("true") | Some("1") => Ok(true),
        Some(other) => Err(ApiError::new(ErrorCode::Format, format!("bare: expected true or false, got '{other}'"))),
    }
}

async fn frame(
    State(state): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<FrameQuery>, QueryRejection>,
) -> Result<Response, ApiError> {
    let Query(q) = query.map_err(bad_request)?;
    let vp = viewport(q.w, q.h)?;
    let opts = RenderOptions {
        bare: parse_flag(q.bare.as_deref())?,
    };
    let out = blocking(move || Ok(state.frame(&id, vp, opts)?)).await?;
    let view = serde_json::to_string(&out.view).map_err(|e| ApiError::new(ErrorCode::Internal, e.to_string()))?;
    let headers = [
        (header::CONTENT_TYPE, HeaderValue::from_static("image/png")),
        (header::CACHE_CONTROL, HeaderValue::from_static("no-store")),
        (header::HeaderName::from_static("x-seq"), HeaderValue::from(out.seq)),
        (
            header::HeaderName::from_static("x-view"),
            HeaderValue::from_str(&view).map_err(|e| ApiError::new(ErrorCode::Internal, e.to_string()))?,
        ),
    ];
    Ok((headers, out.png.as_ref().clone()).into_response())
}

#[derive(Deserialize)]
struct NavRequest {
    #[serde(flatten)]
    action: NavAction,
    w: Option<u32>,
    h: Option<u32>,
}

#[derive(Serialize)]
struct NavResponse {
    seq: u64,
    view: ViewState,
}

async fn navigate(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<NavRequest>, JsonRejection>,
) -> Result<Json<NavResponse>, ApiError> {
    let Json(req) = body.map_err(bad_request)?;
    let vp = viewport(req.w, req.h)?;
    let info = state.navigate(&id, &req.action, vp)?;
    Ok(Json(NavResponse {
        seq: info.seq,
        view: info.view,
    }))
}

#[derive(Deserialize)]
struct IdentifyQuery {
    x: f64,
    y: f64,
    r: Option<f64>,
    w: Option<u32>,
    h: Option<u32>,
}

pub const DEFAULT_IDENTIFY_RADIUS: f64 = 5.0;

struct Cells(Vec<(String, CellValue)>);

impl Serialize for Cells {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (name, v) in &self.0 {
            match v {
                CellValue::Null => map.serialize_entry(name, &())?,
                // JSON has no NaN or infinity.
                CellValue::Float(f) if !f.is_finite() => map.serialize_entry(name, &())?,
                CellValue::Float(f) => map.serialize_entry(name, f)?,
                CellValue::Int(i) => map.serialize_entry(name, i)?,
                CellValue::Bool(b) => map.serialize_entry(name, b)?,
                CellValue::Text(t) => map.serialize_entry(name, t)?,
            }
        }
        map.end()
    }
}

#[derive(Serialize)]
struct RowBody {
    index: usize,
    cells: Cells,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct IdentifyResponse {
    row: Option<RowBody>,
    #[serde(skip_serializing_if = "Option::is_none")]
    distance_px: Option<f64>,
}

async fn identify(
    State(state): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<IdentifyQuery>, QueryRejection>,
) -> Result<Json<IdentifyResponse>, ApiError> {
    let Query(q) = query.map_err(bad_request)?;
    let vp = viewport(q.w, q.h)?;
    let g = GraphicsPoint { x: q.x, y: q.y };
    let r = q.r.unwrap_or(DEFAULT_IDENTIFY_RADIUS);
    let hit: Option<IdentifiedRow> = blocking(move || Ok(state.identify(&id, vp, g, r)?)).await?;
    Ok(Json(match hit {
        Some(h) => IdentifyResponse {
            distance_px: Some(h.distance_px),
            row: Some(RowBody {
                index: h.index,
                cells: Cells(h.cells),
            }),
        },
        None => IdentifyResponse {
            row: None,
            distance_px: None,
        },
    }))
}

async fn metrics(State(state): State<AppState>) -> impl IntoResponse {
    (
        [(header::CONTENT_TYPE, "text/plain; version=0.0.4")],
        state.metrics_text(),
    )
}

/// Fallback so unknown paths also answer with an error body.
pub async fn not_found() -> ApiError {
    ApiError::new(ErrorCode::NameError, "no such endpoint")
}
