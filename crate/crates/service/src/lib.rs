//! HTTP facade over the segmentation engine: volume catalog, slice and
//! overlay images, stroke accumulation, segmentation runs, mask export
//! and metrics.

pub mod error;
pub mod render;
pub mod state;

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine;
use segbench_core::growcut::{self, GrowCutParams, StrokeSet};
use segbench_core::nrrd::{self, NrrdGrid};
use segbench_core::volume::{LabelGrid, Plane};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;

pub use error::ApiError;
pub use state::{AppState, ServiceConfig, SessionSnapshot, SessionView};
use state::{RunStatus, SegmentOutcome, Session};

type Shared = Arc<AppState>;
type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/volumes", get(list_volumes))
        .route("/volumes/{vid}/slice", get(volume_slice))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/strokes", post(add_strokes).delete(clear_strokes))
        .route("/sessions/{id}/segment", post(run_segment).get(poll_segment))
        .route("/sessions/{id}/overlay", get(session_overlay))
        .route("/sessions/{id}/ground_truth", post(set_ground_truth))
        .route("/sessions/{id}/metrics", get(session_metrics))
        .route("/sessions/{id}/save", post(save_session))
        .route("/masks/{id}", get(get_mask))
        .with_state(state)
}

/// Binds `0.0.0.0:port` and serves until the process exits.
pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    let port = config.port;
    let state = AppState::load(config).map_err(std::io::Error::other)?;
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    axum::serve(listener, router(Arc::new(state))).await
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed body: {e}")))
}

fn lookup(state: &AppState, id: &str) -> ApiResult<Arc<std::sync::Mutex<Session>>> {
    state.session(id).ok_or_else(|| ApiError::not_found("session", id))
}

fn png(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "image/png")], bytes).into_response()
}

async fn list_volumes(State(state): State<Shared>) -> Json<serde_json::Value> {
    let list: Vec<_> = state
        .volumes
        .iter()
        .map(|(id, v)| json!({"id": id, "dims": v.dims(), "spacing": v.spacing()}))
        .collect();
    Json(json!(list))
}

#[derive(Deserialize)]
struct SliceQuery {
    plane: Plane,
    index: usize,
    #[serde(default = "default_window")]
    window: f64,
    #[serde(default = "default_level")]
    level: f64,
}

fn default_window() -> f64 {
    2000.0
}

fn default_level() -> f64 {
    400.0
}

async fn volume_slice(
    State(state): State<Shared>,
    Path(vid): Path<String>,
    Query(q): Query<SliceQuery>,
) -> ApiResult<Response> {
    let volume = state.volumes.get(&vid).ok_or_else(|| ApiError::not_found("volume", &vid))?;
    Ok(png(render::slice_png(volume, q.plane, q.index, q.window, q.level)?))
}

#[derive(Deserialize)]
struct CreateSession {
    volume_id: String,
}

async fn create_session(State(state): State<Shared>, body: Bytes) -> ApiResult<Response> {
    let req: CreateSession = parse_body(&body)?;
    let session = state
        .create_session(&req.volume_id)
        .ok_or_else(|| ApiError::not_found("volume", &req.volume_id))?;
    let view = SessionView::from(&*session.lock().unwrap());
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

async fn get_session(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<SessionView>> {
    let session = lookup(&state, &id)?;
    let view = SessionView::from(&*session.lock().unwrap());
    Ok(Json(view))
}

async fn add_strokes(State(state): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<SessionView>> {
    let set: StrokeSet = parse_body(&body)?;
    let session = lookup(&state, &id)?;
    let mut s = session.lock().unwrap();
    let incoming = growcut::strokes_to_seeds(&set.strokes, s.seeds.dims())?;
    s.seeds.merge(&incoming)?;
    s.strokes.extend(set.strokes);
    Ok(Json(SessionView::from(&*s)))
}

async fn clear_strokes(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<SessionView>> {
    let session = lookup(&state, &id)?;
    let mut s = session.lock().unwrap();
    let dims = s.seeds.dims();
    s.seeds = growcut::SeedSet::new(dims);
    s.strokes.clear();
    Ok(Json(SessionView::from(&*s)))
}

#[derive(Deserialize, Default)]
struct SegmentRequest {
    max_iters: Option<usize>,
}

fn run_response(session_id: &str, run: &RunStatus) -> Response {
    match run {
        RunStatus::Done(outcome) => Json(outcome).into_response(),
        RunStatus::Running => (
            StatusCode::ACCEPTED,
            Json(json!({"status": "running", "poll": format!("/sessions/{session_id}/segment")})),
        )
            .into_response(),
        RunStatus::Failed { kind, message } => {
            ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, kind, message.clone()).into_response()
        }
        RunStatus::Idle => ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no segmentation has run").into_response(),
    }
}

/// Runs GrowCut on the session's seeds. Answers with the outcome when it
/// finishes within the time budget, otherwise 202 and a poll URL; the run
/// continues and records its result on the session either way.
async fn run_segment(State(state): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let req: SegmentRequest = if body.iter().all(u8::is_ascii_whitespace) {
        SegmentRequest::default()
    } else {
        parse_body(&body)?
    };
    let session = lookup(&state, &id)?;
    let (volume, seeds) = {
        let mut s = session.lock().unwrap();
        if s.running() {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "SegmentationRunning",
                "a segmentation is already running on this session",
            ));
        }
        s.run = RunStatus::Running;
        (state.volumes[&s.volume_id].clone(), s.seeds.clone())
    };
    let params = GrowCutParams {
        max_iterations: req.max_iters,
    };

    let job_state = state.clone();
    let job_session = session.clone();
    let job = tokio::task::spawn_blocking(move || {
        let result = growcut::segment(&volume, &seeds, &params);
        let mut s = job_session.lock().unwrap();
        s.run = match result {
            Ok(seg) => {
                let outcome = SegmentOutcome {
                    mask_id: job_state.store_mask(seg.mask),
                    iterations: seg.iterations,
                    elapsed_seconds: seg.elapsed_seconds,
                    converged: seg.converged,
                };
                s.mask_id = Some(outcome.mask_id.clone());
                match job_state.refresh_metrics(&mut s, outcome.elapsed_seconds) {
                    Ok(()) => RunStatus::Done(outcome),
                    Err(e) => RunStatus::Failed {
                        kind: "Metric",
                        message: e.to_string(),
                    },
                }
            }
            Err(e) => {
                let e = ApiError::from(e);
                RunStatus::Failed {
                    kind: e.kind,
                    message: e.message,
                }
            }
        };
    });

    match tokio::time::timeout(state.config.time_budget, job).await {
        Ok(Ok(())) => {}
        Ok(Err(join)) => {
            session.lock().unwrap().run = RunStatus::Idle;
            return Err(ApiError::internal(join.to_string()));
        }
        Err(_) => {}
    }
    let run = session.lock().unwrap().run.clone();
    Ok(run_response(&id, &run))
}

async fn poll_segment(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    let session = lookup(&state, &id)?;
    let run = session.lock().unwrap().run.clone();
    Ok(run_response(&id, &run))
}

#[derive(Deserialize)]
struct OverlayQuery {
    plane: Plane,
    index: usize,
}

async fn session_overlay(
    State(state): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<OverlayQuery>,
) -> ApiResult<Response> {
    let session = lookup(&state, &id)?;
    let image = {
        let s = session.lock().unwrap();
        let mask = s.mask_id.as_deref().and_then(|m| state.mask(m));
        render::overlay_rgba(s.seeds.dims(), mask.as_deref(), &s.seeds, q.plane, q.index)?
    };
    Ok(png(render::overlay_png(&image)?))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GroundTruthRequest {
    path: Option<std::path::PathBuf>,
    nrrd_base64: Option<String>,
}

async fn set_ground_truth(State(state): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<SessionView>> {
    let req: GroundTruthRequest = parse_body(&body)?;
    let bytes = match (req.path, req.nrrd_base64) {
        (Some(path), None) => {
            let full = state.resolve_path(&path);
            std::fs::read(&full).map_err(|e| ApiError::bad_request(format!("{}: {e}", full.display())))?
        }
        (None, Some(b64)) => base64::engine::general_purpose::STANDARD
            .decode(b64.trim())
            .map_err(|e| ApiError::bad_request(format!("bad base64: {e}")))?,
        _ => return Err(ApiError::bad_request("give exactly one of 'path' or 'nrrd_base64'")),
    };
    let mask: LabelGrid = nrrd::parse_nrrd(&bytes)
        .and_then(NrrdGrid::into_labels)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "Nrrd", e.to_string()))?;

    let session = lookup(&state, &id)?;
    let mut s = session.lock().unwrap();
    if mask.dims() != s.seeds.dims() {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "DimsMismatch",
            format!("ground truth {:?} vs volume {:?}", mask.dims().0, s.seeds.dims().0),
        ));
    }
    s.ground_truth = Some(Arc::new(mask));
    let elapsed = match &s.run {
        RunStatus::Done(o) => o.elapsed_seconds,
        _ => 0.0,
    };
    state
        .refresh_metrics(&mut s, elapsed)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "Metric", e.to_string()))?;
    Ok(Json(SessionView::from(&*s)))
}

async fn session_metrics(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    let session = lookup(&state, &id)?;
    let s = session.lock().unwrap();
    match s.metrics {
        Some(m) => Ok(Json(m).into_response()),
        None => Err(ApiError::new(
            StatusCode::NOT_FOUND,
            "NotFound",
            "metrics need a ground truth and a finished segmentation",
        )),
    }
}

async fn save_session(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    let session = lookup(&state, &id)?;
    let snapshot = {
        let s = session.lock().unwrap();
        SessionSnapshot {
            id: s.id.clone(),
            volume_id: s.volume_id.clone(),
            strokes: s.strokes.clone(),
            mask_id: s.mask_id.clone(),
            metrics: s.metrics,
        }
    };
    let dir = state.snapshot_dir();
    let path = dir.join(format!("session-{id}.json"));
    let bytes = serde_json::to_vec_pretty(&snapshot).map_err(|e| ApiError::internal(e.to_string()))?;
    std::fs::create_dir_all(&dir)
        .and_then(|_| std::fs::write(&path, bytes))
        .map_err(|e| ApiError::internal(format!("{}: {e}", path.display())))?;
    Ok(Json(json!({"path": path, "snapshot": snapshot})).into_response())
}

async fn get_mask(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    let mask = state.mask(&id).ok_or_else(|| ApiError::not_found("mask", &id))?;
    Ok(([(header::CONTENT_TYPE, "application/octet-stream")], nrrd::write_labels(&mask)).into_response())
}
