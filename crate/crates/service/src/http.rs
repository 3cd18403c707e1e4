//! Routes:
//!
//! ```text
//! GET    /search?q=..&domain=..   SearchOutcome + revision
//! GET    /ontology                canonical JSON
//! GET    /ontology.owl            OWL subset
//! GET    /report                  MismatchReport against the reference
//! GET    /revision                {"revision": n}
//! POST   /admin/nodes             {parent, label, synonyms?, properties?}
//! PUT    /admin/nodes/{id}        {label?, synonyms?, properties?}
//! DELETE /admin/nodes/{id}?policy=subtree|reparent
//! POST   /admin/purify            {} -> {revision, patchLog}
//! ```
//!
//! Admin routes require `Authorization: Bearer <token>`. Errors are
//! `{"error": code, "detail": message}`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use ontopurify_core::owl::{serialize_json, serialize_owl};
use ontopurify_core::{
    find_mismatches, purify, search, DeletePolicy, DiffError, MutationError, NodeEdit, NodeId,
    PurifyError, SearchError, SearchOutcome,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::CorsLayer;

use crate::state::{AppState, Snapshot};

pub const REVISION_HEADER: &str = "x-revision";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub detail: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, detail: impl Into<String>) -> Self {
        Self {
            status,
            code,
            detail: detail.into(),
        }
    }

    fn bad_request(detail: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BadRequest", detail)
    }

    fn persistence(err: std::io::Error) -> Self {
        tracing::error!(%err, "snapshot persistence failed; mutation rolled back");
        Self::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            "PersistenceFailure",
            err.to_string(),
        )
    }

    fn no_reference() -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "NoReference",
            "no reference ontology is configured",
        )
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Json(json!({"error": self.code, "detail": self.detail}));
        (self.status, body).into_response()
    }
}

impl From<MutationError> for ApiError {
    fn from(err: MutationError) -> Self {
        let status = match err {
            MutationError::UnknownId(_) => StatusCode::NOT_FOUND,
            MutationError::EmptyLabel => StatusCode::BAD_REQUEST,
            _ => StatusCode::CONFLICT,
        };
        Self::new(status, err.code(), err.to_string())
    }
}

impl From<DiffError> for ApiError {
    fn from(err: DiffError) -> Self {
        let status = match err {
            DiffError::IncompatibleVersions { .. } => StatusCode::CONFLICT,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, err.code(), err.to_string())
    }
}

impl From<SearchError> for ApiError {
    fn from(err: SearchError) -> Self {
        match err {
            SearchError::Diff(e) => e.into(),
            other => Self::new(StatusCode::BAD_REQUEST, other.code(), other.to_string()),
        }
    }
}

impl From<PurifyError> for ApiError {
    fn from(err: PurifyError) -> Self {
        match err {
            PurifyError::Diff(e) => e.into(),
            other => Self::new(
                StatusCode::INTERNAL_SERVER_ERROR,
                other.code(),
                other.to_string(),
            ),
        }
    }
}

type Shared = Arc<AppState>;

pub fn router(state: Shared) -> Router {
    let admin = Router::new()
        .route("/nodes", post(insert_node))
        .route("/nodes/{id}", put(modify_node).delete(delete_node))
        .route("/purify", post(purify_now))
        .route_layer(middleware::from_fn_with_state(state.clone(), require_token));
    Router::new()
        .route("/search", get(search_handler))
        .route("/ontology", get(ontology_json))
        .route("/ontology.owl", get(ontology_owl))
        .route("/report", get(report))
        .route("/revision", get(revision))
        .nest("/admin", admin)
        .layer(CorsLayer::permissive())
        .with_state(state)
}

async fn require_token(State(state): State<Shared>, request: Request, next: Next) -> Response {
    let presented = request
        .headers()
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "));
    match presented {
        Some(token) if state.token_matches(token.trim()) => next.run(request).await,
        _ => ApiError::new(
            StatusCode::UNAUTHORIZED,
            "BadToken",
            "missing or wrong bearer token",
        )
        .into_response(),
    }
}

fn with_revision(mut response: Response, revision: u64) -> Response {
    response
        .headers_mut()
        .insert(REVISION_HEADER, HeaderValue::from(revision));
    response
}

fn outcome_json(outcome: &SearchOutcome, revision: u64) -> Json<Value> {
    let mut value = serde_json::to_value(outcome).expect("outcome serializes");
    value["revision"] = json!(revision);
    Json(value)
}

async fn search_handler(
    State(state): State<Shared>,
    Query(params): Query<HashMap<String, String>>,
) -> Result<Json<Value>, ApiError> {
    let raw = params.get("q").map(String::as_str).unwrap_or_default();
    // a missing domain matches no ontology and surfaces as DomainMismatch
    let domain = params.get("domain").map(String::as_str).unwrap_or_default();
    let query = ontopurify_core::Query::new(raw, domain)?;
    let reference = state.reference().map(Arc::as_ref);
    let snap = state.snapshot();
    let outcome = search(&snap.ontology, reference, &query)?;
    let reference = match (&outcome, reference) {
        (SearchOutcome::NeedsPurification(_), Some(r)) if state.auto_purify() => r,
        _ => return Ok(outcome_json(&outcome, snap.revision)),
    };

    let writer = state.writer().await;
    let current = writer.current();
    // another writer may have repaired or edited the snapshot meanwhile
    let outcome = search(&current.ontology, Some(reference), &query)?;
    if !matches!(outcome, SearchOutcome::NeedsPurification(_)) {
        return Ok(outcome_json(&outcome, current.revision));
    }
    let repaired = purify(&current.ontology, reference)?;
    let ops = repaired.log.len();
    let next = writer
        .commit(repaired.purified)
        .await
        .map_err(ApiError::persistence)?;
    tracing::info!(revision = next.revision, ops, query = %query.raw, "auto-purified on search");
    let outcome = search(&next.ontology, Some(reference), &query)?;
    Ok(outcome_json(&outcome, next.revision))
}

async fn ontology_json(State(state): State<Shared>) -> Response {
    let snap = state.snapshot();
    let body = serialize_json(&snap.ontology);
    let response = ([(header::CONTENT_TYPE, "application/json")], body).into_response();
    with_revision(response, snap.revision)
}

async fn ontology_owl(State(state): State<Shared>) -> Response {
    let snap = state.snapshot();
    let body = serialize_owl(&snap.ontology);
    let response = ([(header::CONTENT_TYPE, "application/rdf+xml")], body).into_response();
    with_revision(response, snap.revision)
}

async fn report(State(state): State<Shared>) -> Result<Response, ApiError> {
    let reference = state.reference().ok_or_else(ApiError::no_reference)?;
    let snap = state.snapshot();
    let report = find_mismatches(&snap.ontology, reference)?;
    Ok(with_revision(Json(report).into_response(), snap.revision))
}

async fn revision(State(state): State<Shared>) -> Json<Value> {
    Json(json!({"revision": state.revision()}))
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid body: {e}")))
}

fn parse_id(raw: &str) -> Result<NodeId, ApiError> {
    raw.parse()
        .map_err(|_| ApiError::bad_request(format!("invalid node id {raw:?}")))
}

/// Applies `f` to a copy of the current ontology and commits the result as
/// the next revision.
async fn mutate<T: Serialize>(
    state: &AppState,
    f: impl FnOnce(&mut ontopurify_core::Ontology) -> Result<T, ApiError>,
) -> Result<Json<Value>, ApiError> {
    let writer = state.writer().await;
    let current = writer.current();
    let mut next = (*current.ontology).clone();
    let result = f(&mut next)?;
    let committed: Arc<Snapshot> = writer.commit(next).await.map_err(ApiError::persistence)?;
    Ok(Json(
        json!({"revision": committed.revision, "result": result}),
    ))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InsertRequest {
    parent: NodeId,
    label: String,
    #[serde(default)]
    synonyms: BTreeSet<String>,
    #[serde(default)]
    properties: BTreeMap<String, String>,
}

async fn insert_node(State(state): State<Shared>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let req: InsertRequest = parse_body(&body)?;
    mutate(&state, |o| {
        let id = o.insert_node(req.parent, req.label, req.synonyms, req.properties)?;
        Ok(o.find_node(id).expect("just inserted").record())
    })
    .await
}

async fn modify_node(
    State(state): State<Shared>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let id = parse_id(&id)?;
    let edit: NodeEdit = parse_body(&body)?;
    mutate(&state, |o| {
        o.modify_node(id, &edit)?;
        Ok(o.find_node(id).expect("modified node exists").record())
    })
    .await
}

async fn delete_node(
    State(state): State<Shared>,
    Path(id): Path<String>,
    Query(params): Query<HashMap<String, String>>,
) -> Result<Json<Value>, ApiError> {
    let id = parse_id(&id)?;
    let policy: DeletePolicy = match params.get("policy") {
        Some(p) => p.parse().map_err(ApiError::bad_request)?,
        None => DeletePolicy::default(),
    };
    mutate(&state, |o| {
        let removed = o.delete_node(id, policy)?;
        Ok(json!({"removed": removed}))
    })
    .await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PurifyRequest {}

async fn purify_now(State(state): State<Shared>, body: Bytes) -> Result<Json<Value>, ApiError> {
    if !body.iter().all(u8::is_ascii_whitespace) {
        let _: PurifyRequest = parse_body(&body)?;
    }
    let reference = state.reference().ok_or_else(ApiError::no_reference)?;
    let writer = state.writer().await;
    let current = writer.current();
    let repaired = purify(&current.ontology, reference)?;
    let committed = writer
        .commit(repaired.purified)
        .await
        .map_err(ApiError::persistence)?;
    tracing::info!(
        revision = committed.revision,
        ops = repaired.log.len(),
        "purified"
    );
    Ok(Json(
        json!({"revision": committed.revision, "patchLog": repaired.log}),
    ))
}
