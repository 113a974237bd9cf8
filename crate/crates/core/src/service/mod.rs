//! JSON API over a [`ProjectStore`], consumed by the review UI.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::generate::compare_strategies;
use crate::model::{Hazard, Origin, Phs, ReviewStatus};
use crate::review::{
    export_worksheet, summary_report, DecisionCommand, NewHazard, ProjectStore, ReviewError,
    StoreError, Verdict, WorksheetFormat,
};

const INDEX: &str = include_str!("index.html");

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, error: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: json!({ "error": error, "message": message.into() }),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        let message = r.body_text();
        ApiError {
            status: StatusCode::BAD_REQUEST,
            body: json!({
                "error": "malformed_body",
                "message": message,
                "diagnostics": [{ "severity": "error", "message": message }],
            }),
        }
    }
}

impl From<ReviewError> for ApiError {
    fn from(e: ReviewError) -> Self {
        let message = e.to_string();
        match e {
            ReviewError::NotFound { .. } => {
                ApiError::new(StatusCode::NOT_FOUND, "not_found", message)
            }
            ReviewError::VersionConflict { current, .. } => ApiError {
                status: StatusCode::CONFLICT,
                body: json!({ "error": "version_conflict", "message": message, "current": current }),
            },
            ReviewError::Duplicate { .. } => {
                ApiError::new(StatusCode::CONFLICT, "duplicate", message)
            }
            ReviewError::EmptyLeg(_) | ReviewError::InvalidId(_) => ApiError::bad_request(message),
            ReviewError::IllegalTransition { .. }
            | ReviewError::RationaleRequired
            | ReviewError::NotHazardous { .. } => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "rule_violation", message)
            }
            ReviewError::Generate(_) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_model", message)
            }
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Review(r) => r.into(),
            StoreError::Import(i) => ApiError {
                status: StatusCode::BAD_REQUEST,
                body: json!({ "error": "malformed_body", "message": i.to_string(), "diagnostics": i.0 }),
            },
            other => ApiError::new(
                StatusCode::INTERNAL_SERVER_ERROR,
                "store",
                other.to_string(),
            ),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;
type Store = Arc<ProjectStore>;

pub fn router(store: Store) -> Router {
    Router::new()
        .route("/", get(|| async { Html(INDEX) }))
        .route("/api/project", get(project))
        .route("/api/phs", get(list_phs))
        .route("/api/phs/:id", get(get_phs))
        .route("/api/phs/:id/decision", post(decide))
        .route("/api/hazards", post(new_hazard))
        .route("/api/hazards/:id/trace", post(trace))
        .route("/api/report", get(report))
        .route("/api/compare", get(compare))
        .route("/api/worksheet", get(worksheet))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route") })
        .with_state(store)
}

/// Binds `addr` and serves until ctrl-c. Binding errors (e.g. the port is
/// taken) are returned before anything is served.
pub async fn serve(store: Store, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn project(State(store): State<Store>) -> Response {
    Json(store.snapshot().as_ref().clone()).into_response()
}

#[derive(Debug, Deserialize)]
struct PhsFilter {
    status: Option<String>,
    scenario: Option<String>,
    origin: Option<String>,
}

async fn list_phs(
    State(store): State<Store>,
    Query(f): Query<PhsFilter>,
) -> ApiResult<Json<Vec<Phs>>> {
    let status = f
        .status
        .as_deref()
        .map(|s| {
            ReviewStatus::parse(s)
                .ok_or_else(|| ApiError::bad_request(format!("unknown status `{s}`")))
        })
        .transpose()?;
    let origin = f
        .origin
        .as_deref()
        .map(|s| {
            Origin::parse(s).ok_or_else(|| ApiError::bad_request(format!("unknown origin `{s}`")))
        })
        .transpose()?;
    let snap = store.snapshot();
    let rows = snap
        .phs_set
        .iter()
        .filter(|p| status.is_none_or(|s| p.review.status == s))
        .filter(|p| origin.is_none_or(|o| p.origin == o))
        .filter(|p| f.scenario.as_deref().is_none_or(|s| p.scenario == s))
        .cloned()
        .collect();
    Ok(Json(rows))
}

#[derive(Debug, Serialize)]
struct PhsView {
    #[serde(flatten)]
    phs: Phs,
    hazards: Vec<Hazard>,
}

async fn get_phs(State(store): State<Store>, Path(id): Path<String>) -> ApiResult<Json<PhsView>> {
    let snap = store.snapshot();
    let phs = snap.phs(&id).ok_or(ReviewError::NotFound {
        kind: "PHS",
        id: id.clone(),
    })?;
    Ok(Json(PhsView {
        phs: phs.clone(),
        hazards: snap.hazards_of(&id).cloned().collect(),
    }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DecisionBody {
    new_status: Verdict,
    #[serde(default)]
    rationale: String,
    #[serde(default)]
    reviewer: String,
    expected_version: u64,
}

async fn decide(
    State(store): State<Store>,
    Path(id): Path<String>,
    body: Result<Json<DecisionBody>, JsonRejection>,
) -> ApiResult<Response> {
    let Json(body) = body?;
    let phs = store
        .snapshot()
        .phs(&id)
        .map(|p| p.id.clone())
        .ok_or(ReviewError::NotFound { kind: "PHS", id })?;
    let cmd = DecisionCommand {
        phs,
        new_status: body.new_status,
        rationale: body.rationale,
        reviewer: body.reviewer,
        expected_version: body.expected_version,
    };
    let state = store.record_decision(&cmd)?;
    Ok(Json(state).into_response())
}

async fn new_hazard(
    State(store): State<Store>,
    body: Result<Json<NewHazard>, JsonRejection>,
) -> ApiResult<Response> {
    let Json(body) = body?;
    let hazard = store.create_hazard(&body)?;
    Ok((StatusCode::CREATED, Json(hazard)).into_response())
}

#[derive(Debug, Deserialize)]
struct CatalogQuery {
    catalog: Option<String>,
}

async fn trace(
    State(store): State<Store>,
    Path(id): Path<String>,
    Query(q): Query<CatalogQuery>,
) -> ApiResult<Response> {
    let links = store.trace(&id, q.catalog.as_deref())?;
    Ok(Json(links).into_response())
}

async fn report(State(store): State<Store>) -> Response {
    Json(summary_report(&store.snapshot())).into_response()
}

async fn compare(State(store): State<Store>, Query(q): Query<CatalogQuery>) -> ApiResult<Response> {
    let snap = store.snapshot();
    let catalog = match q.catalog.as_deref() {
        Some(key) => snap.catalog(key).ok_or(ReviewError::NotFound {
            kind: "catalog",
            id: key.to_owned(),
        })?,
        None => match snap.catalogs.as_slice() {
            [only] => only,
            [] => {
                return Err(ReviewError::NotFound {
                    kind: "catalog",
                    id: String::new(),
                }
                .into())
            }
            _ => {
                return Err(ApiError::bad_request(
                    "several catalogs, select one with ?catalog=",
                ))
            }
        },
    };
    let report = compare_strategies(&snap, catalog).map_err(ReviewError::from)?;
    Ok(Json(report).into_response())
}

#[derive(Debug, Deserialize)]
struct FormatQuery {
    format: Option<String>,
}

async fn worksheet(
    State(store): State<Store>,
    Query(q): Query<FormatQuery>,
) -> ApiResult<Response> {
    let format = match q.format.as_deref() {
        None => WorksheetFormat::Json,
        Some(f) => WorksheetFormat::parse(f)
            .ok_or_else(|| ApiError::bad_request(format!("unknown format `{f}`")))?,
    };
    let body = export_worksheet(&store.snapshot(), format);
    let mime = match format {
        WorksheetFormat::Csv => "text/csv; charset=utf-8",
        WorksheetFormat::Json => "application/json",
    };
    Ok(([(header::CONTENT_TYPE, mime)], body).into_response())
}
