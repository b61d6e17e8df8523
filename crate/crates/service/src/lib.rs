//! HTTP service for live teaching sessions.
//!
//! A human teacher creates a session, places cards, tries to end it and
//! answers questionnaire prompts; the learner answers each placement with
//! rendered feedback. Every session is the same engine the simulator uses,
//! and its transcript file is a simulation log that replays identically.
//!
//! | method | path | success |
//! |---|---|---|
//! | POST | `/sessions` | 201 [`SessionDescriptor`] |
//! | GET | `/sessions/{id}` | 200 [`SessionStatus`] |
//! | POST | `/sessions/{id}/placements` | 200 [`FeedbackPayload`] |
//! | POST | `/sessions/{id}/terminate` | 200 [`TerminateResponse`] |
//! | POST | `/sessions/{id}/likert` | 204 |
//! | GET | `/sessions/{id}/transcript` | 200 newline-delimited log records |
//! | GET | `/sessions/{id}/events` | server-sent events, one per log event |

pub mod api;
pub mod error;
pub mod store;

use std::convert::Infallible;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::Stream;
use tokio::sync::broadcast::error::RecvError;
use tokio::sync::Mutex;
use tom2_core::domain::enumerate_cards;
use tom2_core::session::{random_rule, to_ndjson};
use tom2_core::{ConditionKind, EventPayload, Rule, SessionConfig};

pub use api::{
    CreateSessionRequest, FeedbackPayload, FeedbackPush, LikertRequest, PlacementRequest,
    SessionDescriptor, SessionStatus, TerminateResponse,
};
pub use error::ApiError;
pub use store::{LiveSession, LoadError, SessionStore};

#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    /// Required as a bearer token to create sessions; open when `None`.
    pub operator_token: Option<String>,
    /// Where transcripts are written; in memory only when `None`.
    pub log_dir: Option<PathBuf>,
}

#[derive(Clone)]
pub struct AppState {
    config: Arc<ServiceConfig>,
    store: Arc<SessionStore>,
}

impl AppState {
    /// State over an empty store.
    pub fn new(config: ServiceConfig) -> AppState {
        let store = SessionStore::new(config.log_dir.clone());
        AppState {
            config: Arc::new(config),
            store: Arc::new(store),
        }
    }

    /// State that first reopens the sessions persisted under the log dir.
    pub fn recover(config: ServiceConfig) -> Result<AppState, LoadError> {
        let store = match &config.log_dir {
            Some(dir) => SessionStore::load(dir.clone())?,
            None => SessionStore::new(None),
        };
        Ok(AppState {
            config: Arc::new(config),
            store: Arc::new(store),
        })
    }

    pub fn store(&self) -> &SessionStore {
        &self.store
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<LiveSession>>, ApiError> {
        self.store.get(id).ok_or(ApiError::NotFound)
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session_status))
        .route("/sessions/{id}/placements", post(post_placement))
        .route("/sessions/{id}/terminate", post(post_terminate))
        .route("/sessions/{id}/likert", post(post_likert))
        .route("/sessions/{id}/transcript", get(get_transcript))
        .route("/sessions/{id}/events", get(get_events))
        .with_state(state)
}

/// Serves until ctrl-c.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn now() -> Option<String> {
    Some(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true))
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ApiError::BadRequest(e.body_text()))
}

fn authorize(state: &AppState, headers: &HeaderMap) -> Result<(), ApiError> {
    let Some(token) = &state.config.operator_token else {
        return Ok(());
    };
    let given = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "));
    if given == Some(token.as_str()) {
        Ok(())
    } else {
        Err(ApiError::Unauthorized)
    }
}

async fn create_session(
    State(state): State<AppState>,
    headers: HeaderMap,
    payload: Result<Json<CreateSessionRequest>, JsonRejection>,
) -> Result<impl IntoResponse, ApiError> {
    authorize(&state, &headers)?;
    let req = body(payload)?;
    let kind: ConditionKind = req.condition.parse().map_err(|_| {
        ApiError::BadRequest(format!(
            "unknown condition `{}` (expected tom0, tom0random or tom2)",
            req.condition
        ))
    })?;
    let seed = req.seed.unwrap_or_else(rand::random);
    let rule = match req.rule {
        Some(r) => r
            .parse::<Rule>()
            .map_err(|e| ApiError::BadRequest(e.to_string()))?,
        None => random_rule(seed),
    };
    let id = state
        .store
        .create(SessionConfig::live(rule, kind, seed))
        .map_err(|e| match e {
            store::CreateError::Config(m) => ApiError::BadRequest(m),
            store::CreateError::Io(e) => ApiError::Io(e),
        })?;
    let descriptor = SessionDescriptor {
        id,
        cards: enumerate_cards(),
        bins: ["Bin 1".into(), "Bin 2".into()],
    };
    Ok((StatusCode::CREATED, Json(descriptor)))
}

async fn session_status(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<SessionStatus>, ApiError> {
    let live = state.session(&id)?;
    let live = live.lock().await;
    let s = &live.session;
    let ended = s.ended();
    Ok(Json(SessionStatus {
        id,
        t: s.step(),
        lockout: s.lockout(),
        ended,
        rule: ended.map(|_| s.config().rule),
        metrics: ended.map(|_| s.metrics()),
    }))
}

async fn post_placement(
    State(state): State<AppState>,
    Path(id): Path<String>,
    payload: Result<Json<PlacementRequest>, JsonRejection>,
) -> Result<Json<FeedbackPayload>, ApiError> {
    let live = state.session(&id)?;
    let req = body(payload)?;
    let mut live = live.lock().await;
    let outcome = live.session.place(req.placement, now())?;
    live.commit()?;
    Ok(Json(FeedbackPayload {
        t: outcome.t,
        statements: outcome.feedback.map(|d| d.rendered()).unwrap_or_default(),
        diagnostic: outcome.diagnostic,
        ended: outcome.ended,
    }))
}

async fn post_terminate(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<TerminateResponse>, ApiError> {
    let live = state.session(&id)?;
    let mut live = live.lock().await;
    let outcome = live.session.terminate(now())?;
    live.commit()?;
    Ok(Json(TerminateResponse {
        ended: outcome.success,
        metrics: outcome.success.then(|| live.session.metrics()),
    }))
}

async fn post_likert(
    State(state): State<AppState>,
    Path(id): Path<String>,
    payload: Result<Json<LikertRequest>, JsonRejection>,
) -> Result<StatusCode, ApiError> {
    let live = state.session(&id)?;
    let req = body(payload)?;
    let mut live = live.lock().await;
    live.session.likert(req.prompt, req.score, now())?;
    live.commit()?;
    Ok(StatusCode::NO_CONTENT)
}

async fn get_transcript(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<impl IntoResponse, ApiError> {
    let live = state.session(&id)?;
    let live = live.lock().await;
    let text = to_ndjson(&live.visible_records());
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], text))
}

fn event_name(payload: &EventPayload) -> &'static str {
    match payload {
        EventPayload::Placement { .. } => "placement",
        EventPayload::TerminateAttempt { .. } => "terminate_attempt",
        EventPayload::Feedback { .. } => "feedback",
        EventPayload::LikertResponse { .. } => "likert_response",
        EventPayload::SessionEnd { .. } => "session_end",
    }
}

/// Pushes each new event, without learner state, as it is committed.
/// Feedback events carry the rendered statements, exactly as the placement
/// response does; other events carry the log event itself.
async fn get_events(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let rx = state.session(&id)?.lock().await.subscribe();
    let stream = futures::stream::unfold(rx, |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(e) => {
                    let event = Event::default()
                        .event(event_name(&e.payload))
                        .id(e.seq.to_string());
                    let event = match &e.payload {
                        EventPayload::Feedback { decision } => event.json_data(FeedbackPush {
                            t: e.t,
                            statements: decision.rendered(),
                        }),
                        _ => event.json_data(&e),
                    };
                    return Some((Ok(event.expect("events serialize")), rx));
                }
                // A slow client misses events; the transcript has them all.
                Err(RecvError::Lagged(_)) => continue,
                Err(RecvError::Closed) => return None,
            }
        }
    });
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()))
}
