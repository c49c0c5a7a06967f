//! Routes, handlers and the run worker.

use std::ops::ControlFlow;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use cvel::pipeline::{
    encode_png, extract_contour, init_phi, overlay_png, segment_observed, trace_csv, trace_rows,
    Contour, InitShape, RunSummary,
};
use cvel::{Landmark, LandmarkSet, Mode, ModelParams, Preset};
use serde_json::{json, Map, Value};
use tower_http::services::ServeDir;

use crate::session::{lock, Progress, Session, SessionRef, Status, Store};

const MAX_BODY: usize = 64 << 20;

#[derive(Debug)]
pub enum ApiError {
    NotFound(String),
    BadRequest(String),
    Conflict(String),
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (code, msg) = match self {
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, m),
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, m),
            ApiError::Conflict(m) => (StatusCode::CONFLICT, m),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, m),
        };
        (code, Json(json!({ "error": msg }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn bad(e: impl std::fmt::Display) -> ApiError {
    ApiError::BadRequest(e.to_string())
}

/// The service router. `static_dir`, when given, is served for every path
/// the API does not claim.
pub fn router(store: Arc<Store>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_state).delete(delete_session))
        .route("/sessions/{id}/image", put(put_image))
        .route("/sessions/{id}/landmarks", put(put_landmarks))
        .route("/sessions/{id}/params", put(put_params))
        .route("/sessions/{id}/run", post(start_run))
        .route("/sessions/{id}/cancel", post(cancel_run))
        .route("/sessions/{id}/contour", get(get_contour))
        .route("/sessions/{id}/trace", get(get_trace))
        .route("/sessions/{id}/overlay.png", get(get_overlay))
        .route("/sessions/{id}/mask.png", get(get_mask))
        .layer(DefaultBodyLimit::max(MAX_BODY))
        .with_state(store);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Evicts idle sessions every `period` until the runtime shuts down.
pub fn spawn_sweeper(store: Arc<Store>, period: Duration) {
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(period);
        loop {
            tick.tick().await;
            store.evict_idle(std::time::Instant::now());
        }
    });
}

fn session(store: &Store, id: &str) -> ApiResult<SessionRef> {
    store
        .get(id)
        .ok_or_else(|| ApiError::NotFound(format!("unknown session `{id}`")))
}

fn not_running(s: &Session, what: &str) -> ApiResult<()> {
    if s.is_running() {
        Err(ApiError::Conflict(format!("cannot {what} while a run is in progress")))
    } else {
        Ok(())
    }
}

fn effective_init(s: &Session, h: usize, w: usize) -> InitShape {
    s.init.unwrap_or_else(|| InitShape::centered_circle(h, w, 0.25))
}

fn state_json(s: &Session) -> Value {
    let progress = s.progress.as_deref();
    let dims = s.image.as_ref().map(|im| im.dims());
    json!({
        "id": s.id,
        "status": s.status,
        "error": s.error,
        "image": dims.map(|(h, w)| json!({ "height": h, "width": w })),
        "landmarks": s.landmarks.points,
        "dilation_radius": s.landmarks.dilation_radius,
        "params": s.params,
        "mode": s.params.mode(),
        "init": dims.map(|(h, w)| effective_init(s, h, w)).or(s.init),
        "iteration": progress.map_or(0, |p| p.iteration),
        "converged": progress.is_some_and(|p| p.report.converged),
        "last_metrics": progress.and_then(|p| p.report.last_metrics()).map(|m| m.as_array()),
        "final_energy": progress.and_then(|p| p.report.final_energy()),
        "summary": s.summary,
    })
}

async fn create_session(State(store): State<Arc<Store>>) -> impl IntoResponse {
    let id = store.create();
    (StatusCode::CREATED, Json(json!({ "id": id })))
}

async fn delete_session(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
) -> ApiResult<StatusCode> {
    let s = store
        .remove(&id)
        .ok_or_else(|| ApiError::NotFound(format!("unknown session `{id}`")))?;
    if let Some(flag) = &lock(&s).cancel {
        flag.store(true, Ordering::Relaxed);
    }
    Ok(StatusCode::NO_CONTENT)
}

async fn get_state(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
) -> ApiResult<Json<Value>> {
    let s = session(&store, &id)?;
    let s = lock(&s);
    Ok(Json(state_json(&s)))
}

async fn put_image(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let s = session(&store, &id)?;
    let image = cvel::pipeline::decode_image(&body).map_err(bad)?;
    let mut s = lock(&s);
    not_running(&s, "replace the image")?;
    s.image = Some(image);
    s.clear_results();
    s.status = Status::Idle;
    Ok(Json(state_json(&s)))
}

/// Landmarks arrive as the file format (a JSON array of points) or as an
/// object `{"points": [...], "dilation_radius": r}`.
fn parse_landmarks(body: &[u8], current_radius: usize) -> ApiResult<LandmarkSet> {
    let value: Value = serde_json::from_slice(body).map_err(bad)?;
    match value {
        Value::Array(_) => {
            let points: Vec<Landmark> = serde_json::from_value(value).map_err(bad)?;
            Ok(LandmarkSet::new(points).with_radius(current_radius))
        }
        Value::Object(mut obj) => {
            let radius = match obj.remove("dilation_radius") {
                Some(r) => serde_json::from_value(r).map_err(bad)?,
                None => current_radius,
            };
            let points = obj
                .remove("points")
                .ok_or_else(|| bad("landmark object needs `points`"))?;
            let points: Vec<Landmark> = serde_json::from_value(points).map_err(bad)?;
            Ok(LandmarkSet::new(points).with_radius(radius))
        }
        _ => Err(bad("landmarks must be a JSON array or object")),
    }
}

async fn put_landmarks(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let s = session(&store, &id)?;
    let mut s = lock(&s);
    not_running(&s, "edit landmarks")?;
    let set = parse_landmarks(&body, s.landmarks.dilation_radius)?;
    if let Some(im) = &s.image {
        let (h, w) = im.dims();
        set.validate(h, w).map_err(bad)?;
    }
    s.landmarks = set;
    Ok(Json(state_json(&s)))
}

/// Builds parameters from defaults, an optional `preset`, explicit fields
/// and an optional `mode`, in that order. `mode` together with `mu` or `b`
/// is rejected.
fn parse_params(body: &[u8]) -> ApiResult<(ModelParams, Option<InitShape>)> {
    let value: Value = serde_json::from_slice(body).map_err(bad)?;
    let Value::Object(mut obj) = value else {
        return Err(bad("params must be a JSON object"));
    };
    let preset: Option<Preset> = match obj.remove("preset") {
        Some(Value::String(p)) => Some(p.parse().map_err(bad)?),
        Some(Value::Null) | None => None,
        Some(other) => return Err(bad(format!("preset must be a string, got {other}"))),
    };
    let mode: Option<Mode> = match obj.remove("mode") {
        Some(Value::String(m)) => Some(m.parse().map_err(bad)?),
        Some(Value::Null) | None => None,
        Some(other) => return Err(bad(format!("mode must be a string, got {other}"))),
    };
    let init: Option<InitShape> = match obj.remove("init") {
        Some(Value::String(spec)) => Some(spec.parse().map_err(bad)?),
        Some(Value::Null) | None => None,
        Some(v) => Some(serde_json::from_value(v).map_err(bad)?),
    };
    if mode.is_some() && (obj.contains_key("mu") || obj.contains_key("b")) {
        return Err(bad("`mode` cannot be combined with explicit `mu` or `b`"));
    }

    let mut base = ModelParams::default();
    if let Some(p) = preset {
        base = base.with_preset(p);
    }
    let Value::Object(mut merged) = serde_json::to_value(&base).map_err(bad)? else {
        unreachable!("parameters serialize to an object")
    };
    merge(&mut merged, obj)?;
    let mut params: ModelParams = serde_json::from_value(Value::Object(merged)).map_err(bad)?;
    if let Some(m) = mode {
        params = params.with_mode(m);
    }
    params.validate().map_err(bad)?;
    Ok((params, init))
}

fn merge(into: &mut Map<String, Value>, from: Map<String, Value>) -> ApiResult<()> {
    for (k, v) in from {
        if !into.contains_key(&k) {
            return Err(bad(format!("unknown parameter `{k}`")));
        }
        into.insert(k, v);
    }
    Ok(())
}

async fn put_params(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let s = session(&store, &id)?;
    let (params, init) = parse_params(&body)?;
    let mut s = lock(&s);
    not_running(&s, "change parameters")?;
    s.params = params;
    if init.is_some() {
        s.init = init;
    }
    Ok(Json(state_json(&s)))
}

async fn start_run(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let handle = session(&store, &id)?;
    let mut s = lock(&handle);
    if s.is_running() {
        return Err(ApiError::Conflict("a run is already in progress".into()));
    }
    let image = s
        .image
        .clone()
        .ok_or_else(|| ApiError::Conflict("upload an image before running".into()))?;
    let (h, w) = image.dims();
    s.landmarks.validate(h, w).map_err(bad)?;
    let init = effective_init(&s, h, w);
    init_phi(&init, h, w).map_err(bad)?;
    s.params.validate().map_err(bad)?;

    let cancel = Arc::new(AtomicBool::new(false));
    s.clear_results();
    s.status = Status::Running;
    s.cancel = Some(cancel.clone());
    let landmarks = s.landmarks.clone();
    let params = s.params.clone();
    let body = state_json(&s);
    drop(s);

    let worker = handle.clone();
    tokio::task::spawn_blocking(move || {
        run_worker(&worker, &image, &landmarks, &init, &params, &cancel)
    });
    Ok((StatusCode::ACCEPTED, Json(body)))
}

fn run_worker(
    handle: &SessionRef,
    image: &cvel::ScalarField,
    landmarks: &LandmarkSet,
    init: &InitShape,
    params: &ModelParams,
    cancel: &AtomicBool,
) {
    let result = segment_observed(image, landmarks, init, params, |state, report| {
        let snapshot = Arc::new(Progress {
            iteration: state.outer_iter,
            report: report.clone(),
            contour: extract_contour(&state.phi),
        });
        lock(handle).progress = Some(snapshot);
        if cancel.load(Ordering::Relaxed) {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });

    let mut s = lock(handle);
    s.cancel = None;
    match result {
        Ok(seg) => {
            s.progress = Some(Arc::new(Progress {
                iteration: seg.report.iterations_run,
                report: seg.report.clone(),
                contour: seg.contour.clone(),
            }));
            if cancel.load(Ordering::Relaxed) {
                s.status = Status::Failed;
                s.error = Some("cancelled".into());
            } else {
                match RunSummary::new(&seg, landmarks, params, None) {
                    Ok(summary) => {
                        s.summary = Some(summary);
                        s.mask = Some(seg.mask);
                        s.status = Status::Done;
                    }
                    Err(e) => {
                        s.status = Status::Failed;
                        s.error = Some(e.to_string());
                    }
                }
            }
        }
        Err(e) => {
            s.status = Status::Failed;
            s.error = Some(e.to_string());
        }
    }
}

async fn cancel_run(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let s = session(&store, &id)?;
    let s = lock(&s);
    match (&s.cancel, s.is_running()) {
        (Some(flag), true) => {
            flag.store(true, Ordering::Relaxed);
            Ok((StatusCode::ACCEPTED, Json(state_json(&s))))
        }
        _ => Err(ApiError::Conflict("no run in progress".into())),
    }
}

fn progress(store: &Store, id: &str) -> ApiResult<Option<Arc<Progress>>> {
    let s = session(store, id)?;
    let p = lock(&s).progress.clone();
    Ok(p)
}

async fn get_contour(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
) -> ApiResult<Response> {
    let p = progress(&store, &id)?
        .ok_or_else(|| ApiError::NotFound("no contour yet: start a run first".into()))?;
    Ok(json_text(p.contour.to_json()))
}

fn json_text(text: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], text).into_response()
}

fn wants_csv(headers: &HeaderMap) -> bool {
    headers
        .get_all(header::ACCEPT)
        .iter()
        .filter_map(|v| v.to_str().ok())
        .any(|v| v.contains("text/csv"))
}

/// The run trace so far: CSV when the client accepts `text/csv`, JSON rows
/// otherwise.
async fn get_trace(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> ApiResult<Response> {
    let report = progress(&store, &id)?
        .map(|p| p.report.clone())
        .unwrap_or_default();
    if wants_csv(&headers) {
        Ok(([(header::CONTENT_TYPE, "text/csv")], trace_csv(&report)).into_response())
    } else {
        Ok(Json(trace_rows(&report)).into_response())
    }
}

fn png(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "image/png")], bytes).into_response()
}

async fn get_overlay(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
) -> ApiResult<Response> {
    let handle = session(&store, &id)?;
    let (image, landmarks, progress) = {
        let s = lock(&handle);
        (s.image.clone(), s.landmarks.clone(), s.progress.clone())
    };
    let image = image.ok_or_else(|| ApiError::NotFound("no image uploaded".into()))?;
    let empty = Contour::default();
    let contour = progress.as_deref().map_or(&empty, |p| &p.contour);
    let bytes = overlay_png(&image, contour, &landmarks).map_err(|e| ApiError::Internal(e.to_string()))?;
    Ok(png(bytes))
}

async fn get_mask(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
) -> ApiResult<Response> {
    let handle = session(&store, &id)?;
    let mask = lock(&handle).mask.clone();
    let mask = mask.ok_or_else(|| ApiError::NotFound("no completed run".into()))?;
    let bytes = encode_png(&mask).map_err(|e| ApiError::Internal(e.to_string()))?;
    Ok(png(bytes))
}
