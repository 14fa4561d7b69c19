//! HTTP interface. JSON bodies everywhere; updates are pushed over
//! server-sent events. Field names are listed in `docs/API.md`.

use std::convert::Infallible;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use futures::stream::{self, Stream};
use learnsim::{ModelParams, TeachingControl};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::broadcast::{self, error::RecvError};

use crate::hub::{Hub, HubError};
use crate::session::{ClassConfig, Issue, SessionError, Update};

pub type AppState = Arc<Hub>;

pub fn router(hub: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/api/sessions", get(list_sessions).post(create_session))
        .route("/api/sessions/{id}", get(get_state).delete(delete_session))
        .route("/api/sessions/{id}/snapshot", get(get_snapshot))
        .route("/api/sessions/{id}/advance", post(advance))
        .route("/api/sessions/{id}/control", post(set_control))
        .route("/api/sessions/{id}/speed", post(set_speed))
        .route("/api/sessions/{id}/running", post(set_running))
        .route("/api/sessions/{id}/quiz", post(give_quiz))
        .route("/api/sessions/{id}/score", get(score))
        .route("/api/sessions/{id}/students/{student}/history", get(history))
        .route("/api/sessions/{id}/students/{student}/params", put(update_params))
        .route("/api/sessions/{id}/stream", get(stream_updates))
        .with_state(hub)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
    issues: Vec<Issue>,
}

impl ApiError {
    fn bad_request(issues: Vec<Issue>) -> Self {
        let message = issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; ");
        Self {
            status: StatusCode::BAD_REQUEST,
            kind: "invalid",
            message,
            issues,
        }
    }
}

impl From<HubError> for ApiError {
    fn from(e: HubError) -> Self {
        match e {
            HubError::NotFound(_) => Self {
                status: StatusCode::NOT_FOUND,
                kind: "not_found",
                message: e.to_string(),
                issues: Vec::new(),
            },
            HubError::Session(e) => e.into(),
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Invalid(issues) => Self::bad_request(issues),
            SessionError::UnknownStudent(_) => Self {
                status: StatusCode::NOT_FOUND,
                kind: "not_found",
                message: e.to_string(),
                issues: Vec::new(),
            },
            SessionError::Simulation(_) => Self {
                status: StatusCode::UNPROCESSABLE_ENTITY,
                kind: "simulation",
                message: e.to_string(),
                issues: Vec::new(),
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({
            "error": { "kind": self.kind, "message": self.message, "issues": self.issues }
        });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Strict JSON body parsing with the offending field path in the error.
fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    let de = &mut serde_json::Deserializer::from_slice(body);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { String::new() } else { path };
        ApiError::bad_request(vec![Issue {
            path,
            message: e.into_inner().to_string(),
        }])
    })
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

async fn list_sessions(State(hub): State<AppState>) -> Json<serde_json::Value> {
    Json(json!({ "sessions": hub.summaries().await }))
}

async fn create_session(State(hub): State<AppState>, body: Bytes) -> Result<impl IntoResponse, ApiError> {
    let config: ClassConfig = parse(&body)?;
    let state = hub.create(config)?;
    Ok((StatusCode::CREATED, Json(state)))
}

async fn get_state(State(hub): State<AppState>, Path(id): Path<String>) -> ApiResult<crate::session::SessionState> {
    Ok(Json(hub.with(&id, |s| s.state()).await?))
}

async fn get_snapshot(State(hub): State<AppState>, Path(id): Path<String>) -> ApiResult<crate::session::Snapshot> {
    Ok(Json(hub.with(&id, |s| s.snapshot()).await?))
}

async fn delete_session(State(hub): State<AppState>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    hub.remove(&id).await?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AdvanceRequest {
    #[serde(default)]
    dt: Option<f64>,
    #[serde(default)]
    real_seconds: Option<f64>,
}

async fn advance(
    State(hub): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<crate::session::Snapshot> {
    let req: AdvanceRequest = parse(&body)?;
    let snap = match (req.dt, req.real_seconds) {
        (Some(dt), None) => hub.command(&id, |s| s.advance(dt)).await?,
        (None, Some(secs)) => hub.command(&id, |s| s.advance_real(secs)).await?,
        _ => {
            return Err(ApiError::bad_request(vec![Issue {
                path: String::new(),
                message: "give exactly one of `dt` or `real_seconds`".into(),
            }]))
        }
    };
    Ok(Json(snap))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ControlRequest {
    #[serde(default)]
    u: f64,
    teaching: bool,
}

async fn set_control(
    State(hub): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<crate::session::ControlAck> {
    let req: ControlRequest = parse(&body)?;
    let control = TeachingControl {
        teaching: req.teaching,
        u: req.u,
    };
    Ok(Json(hub.command(&id, |s| s.set_control(control)).await?))
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct SpeedBody {
    speed: f64,
}

async fn set_speed(State(hub): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<SpeedBody> {
    let req: SpeedBody = parse(&body)?;
    let speed = hub.command(&id, |s| s.set_speed(req.speed)).await?;
    Ok(Json(SpeedBody { speed }))
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RunningBody {
    running: bool,
}

async fn set_running(State(hub): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<RunningBody> {
    let req: RunningBody = parse(&body)?;
    let running = hub.with(&id, |s| s.set_running(req.running)).await?;
    Ok(Json(RunningBody { running }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuizRequest {
    theta: f64,
}

async fn give_quiz(
    State(hub): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<crate::session::QuizResult> {
    let req: QuizRequest = parse(&body)?;
    Ok(Json(hub.command(&id, |s| s.give_quiz(req.theta)).await?))
}

async fn score(State(hub): State<AppState>, Path(id): Path<String>) -> ApiResult<crate::session::ScoreReport> {
    Ok(Json(hub.with(&id, |s| s.score()).await?))
}

async fn history(
    State(hub): State<AppState>,
    Path((id, student)): Path<(String, String)>,
) -> ApiResult<Vec<crate::session::HistoryPoint>> {
    Ok(Json(hub.command(&id, |s| s.history(&student)).await?))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsRequest {
    params: ModelParams,
}

async fn update_params(
    State(hub): State<AppState>,
    Path((id, student)): Path<(String, String)>,
    body: Bytes,
) -> ApiResult<crate::session::StudentInfo> {
    let req: ParamsRequest = parse(&body)?;
    Ok(Json(hub.command(&id, |s| s.update_student(&student, req.params)).await?))
}

fn sse_event(update: &Update) -> Event {
    Event::default()
        .event(update.kind())
        .id(update.seq().to_string())
        .json_data(update)
        .expect("updates serialize")
}

struct Feed {
    hub: AppState,
    id: String,
    rx: broadcast::Receiver<Arc<Update>>,
    first: Option<Update>,
    done: bool,
}

/// Server-sent events: a `state` message first, then every update in order.
/// A subscriber that falls behind gets a fresh `state` message and resumes
/// from there.
pub fn update_stream(
    hub: AppState,
    id: String,
    state: crate::session::SessionState,
    rx: broadcast::Receiver<Arc<Update>>,
) -> impl Stream<Item = Update> {
    let feed = Feed {
        hub,
        id,
        rx,
        first: Some(Update::State(state)),
        done: false,
    };
    stream::unfold(feed, |mut feed| async move {
        if feed.done {
            return None;
        }
        if let Some(first) = feed.first.take() {
            return Some((first, feed));
        }
        match feed.rx.recv().await {
            Ok(update) => {
                feed.done = matches!(*update, Update::Closed { .. });
                Some(((*update).clone(), feed))
            }
            Err(RecvError::Lagged(_)) => match feed.hub.subscribe(&feed.id).await {
                Ok((state, rx)) => {
                    feed.rx = rx;
                    Some((Update::State(state), feed))
                }
                Err(_) => None,
            },
            Err(RecvError::Closed) => None,
        }
    })
}

async fn stream_updates(
    State(hub): State<AppState>,
    Path(id): Path<String>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let (state, rx) = hub.subscribe(&id).await?;
    let events = futures::StreamExt::map(update_stream(hub, id, state, rx), |u| Ok(sse_event(&u)));
    Ok(Sse::new(events).keep_alive(KeepAlive::default()))
}
