//! HTTP API for annotators: the pending query queue, label submission,
//! progress counters and the labeling guidelines.

use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Query, Request, State};
use axum::http::StatusCode;
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::finegrained::FineLabel;
use crate::refinement::{AnswerError, Progress, QueueItem, SharedStore, GUIDELINES_VERSION};

pub const TOKEN_HEADER: &str = "x-annotator-token";

#[derive(Clone)]
pub struct ServiceState {
    pub store: Arc<SharedStore>,
    pub token: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

struct Failure(StatusCode, ApiError);

impl Failure {
    fn new(status: StatusCode, error: impl Into<String>, field: Option<&str>) -> Self {
        Failure(
            status,
            ApiError {
                error: error.into(),
                field: field.map(str::to_string),
            },
        )
    }
}

impl IntoResponse for Failure {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelAck {
    pub cascade_id: String,
    pub fine_label: FineLabel,
    pub working_label: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuidelineLabel {
    pub label: FineLabel,
    pub name: String,
    pub definition: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuidelineExample {
    pub text: String,
    pub label: FineLabel,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GuidelineExamples {
    pub typical: Vec<GuidelineExample>,
    pub tricky: Vec<GuidelineExample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Guidelines {
    pub version: String,
    pub instructions: String,
    pub labels: Vec<GuidelineLabel>,
    pub examples: GuidelineExamples,
}

pub fn guidelines() -> Guidelines {
    Guidelines {
        version: GUIDELINES_VERSION.to_string(),
        instructions: "Label the tweet based on what the tweet is trying to say. Choose one of the below labels.".into(),
        labels: FineLabel::ALL
            .iter()
            .map(|&l| GuidelineLabel {
                label: l,
                name: l.display_name().to_string(),
                definition: l.definition().to_string(),
            })
            .collect(),
        examples: GuidelineExamples::default(),
    }
}

#[derive(Debug, Deserialize)]
struct QueueParams {
    limit: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProceedAck {
    pub iteration: usize,
    pub proceed: bool,
}

pub fn router(state: ServiceState) -> Router {
    Router::new()
        .route("/api/queue", get(queue))
        .route("/api/label", post(label))
        .route("/api/progress", get(progress))
        .route("/api/guidelines", get(get_guidelines))
        .route("/api/proceed", post(proceed))
        .layer(middleware::from_fn_with_state(state.clone(), require_token))
        .with_state(state)
}

async fn require_token(State(state): State<ServiceState>, request: Request, next: Next) -> Response {
    if let Some(expected) = &state.token {
        let given = request.headers().get(TOKEN_HEADER).and_then(|v| v.to_str().ok());
        if given != Some(expected.as_str()) {
            return Failure::new(StatusCode::UNAUTHORIZED, "missing or wrong annotator token", Some(TOKEN_HEADER))
                .into_response();
        }
    }
    next.run(request).await
}

async fn queue(State(state): State<ServiceState>, Query(params): Query<QueueParams>) -> Json<Vec<QueueItem>> {
    let store = state.store.read();
    let pending = store.queue().pending();
    let n = params.limit.unwrap_or(pending.len()).min(pending.len());
    Json(pending[..n].to_vec())
}

fn allowed_labels() -> String {
    FineLabel::ALL.map(|l| l.as_str()).join(", ")
}

fn string_field<'a>(body: &'a Value, field: &str) -> Result<&'a str, Failure> {
    match body.get(field) {
        Some(Value::String(s)) if !s.trim().is_empty() => Ok(s),
        Some(_) => Err(Failure::new(StatusCode::UNPROCESSABLE_ENTITY, format!("`{field}` must be a non-empty string"), Some(field))),
        None => Err(Failure::new(StatusCode::UNPROCESSABLE_ENTITY, format!("`{field}` is required"), Some(field))),
    }
}

async fn label(State(state): State<ServiceState>, body: Bytes) -> Result<Json<LabelAck>, Failure> {
    let body: Value = serde_json::from_slice(&body)
        .map_err(|e| Failure::new(StatusCode::BAD_REQUEST, format!("body is not valid JSON: {e}"), None))?;
    let cascade_id = string_field(&body, "cascade_id")?;
    let raw_label = string_field(&body, "fine_label")?;
    let annotator = string_field(&body, "annotator_id")?;
    let fine_label = FineLabel::parse(raw_label).ok_or_else(|| {
        Failure::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            format!("unknown label {raw_label:?}; allowed: {}", allowed_labels()),
            Some("fine_label"),
        )
    })?;
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs() as i64).unwrap_or(0);
    let working_label = state
        .store
        .update(|s| s.answer(cascade_id, fine_label, annotator, now))
        .map_err(|e| match e {
            AnswerError::Unknown(_) => Failure::new(StatusCode::NOT_FOUND, e.to_string(), Some("cascade_id")),
            AnswerError::NotPending(_) | AnswerError::AlreadyAnswered(_) => {
                Failure::new(StatusCode::CONFLICT, e.to_string(), Some("cascade_id"))
            }
        })?;
    Ok(Json(LabelAck {
        cascade_id: cascade_id.to_string(),
        fine_label,
        working_label,
    }))
}

async fn progress(State(state): State<ServiceState>) -> Json<Progress> {
    Json(state.store.read().progress())
}

async fn get_guidelines() -> Json<Guidelines> {
    Json(guidelines())
}

async fn proceed(State(state): State<ServiceState>) -> Json<ProceedAck> {
    let iteration = state.store.update(|s| {
        s.request_proceed();
        s.iteration()
    });
    Json(ProceedAck {
        iteration,
        proceed: true,
    })
}

/// Serves `router(state)` on `addr` until the process exits.
pub async fn serve(addr: &str, state: ServiceState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("annotation service listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
