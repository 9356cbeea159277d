//! HTTP service for interactive segmentation sessions.
//!
//! | method | path | |
//! |---|---|---|
//! | POST | `/sessions` | upload a NRRD volume |
//! | GET, DELETE | `/sessions/{id}` | session info, drop the session |
//! | GET | `/sessions/{id}/slice?axis=&index=&layer=&format=&window=&level=` | one 2D slice |
//! | POST, DELETE | `/sessions/{id}/strokes` | add strokes (JSON), clear strokes |
//! | POST, GET | `/sessions/{id}/segment` | start a run, poll its state |
//! | POST | `/sessions/{id}/postedit` | apply a post-edit pipeline |
//! | GET | `/sessions/{id}/metrics` | segmented volume |
//! | GET | `/sessions/{id}/export` | segmentation as NRRD |

mod error;
mod session;
pub mod slice;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use growcut3d_core::imageio::{parse_nrrd, parse_strokes, NrrdVolume};
use growcut3d_core::morphology::apply_pipeline;
use growcut3d_core::volgrid::extract_slice;
use growcut3d_core::volumetry::voxel_volume;
use growcut3d_core::{growcut, Axis, Connectivity, Encoding, GrowCutConfig, PostOp};
use serde::{Deserialize, Serialize};
use serde_json::json;
use uuid::Uuid;

pub use error::{ApiError, ApiResult};
pub use session::{JobState, Session, StrokeSummary};
use slice::{Layer, SliceHeader};

#[derive(Clone, Debug)]
pub struct ServerConfig {
    /// Sessions untouched for this long are dropped.
    pub idle_timeout: Duration,
    pub max_upload_bytes: usize,
    /// Sleep before each segmentation job starts. Lets tests observe a running job.
    pub job_start_delay: Duration,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            idle_timeout: Duration::from_secs(30 * 60),
            max_upload_bytes: 1 << 30,
            job_start_delay: Duration::ZERO,
        }
    }
}

type SessionRef = Arc<Mutex<Session>>;

#[derive(Clone)]
pub struct AppState {
    sessions: Arc<Mutex<HashMap<Uuid, SessionRef>>>,
    config: Arc<ServerConfig>,
}

impl AppState {
    pub fn new(config: ServerConfig) -> Self {
        AppState { sessions: Arc::default(), config: Arc::new(config) }
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().unwrap().len()
    }

    /// Drops sessions idle since before `now - idle_timeout` that have no running job.
    pub fn evict_idle(&self, now: Instant) -> usize {
        let timeout = self.config.idle_timeout;
        let mut sessions = self.sessions.lock().unwrap();
        let before = sessions.len();
        sessions.retain(|_, s| {
            let s = s.lock().unwrap();
            s.is_running() || now.saturating_duration_since(s.last_access) < timeout
        });
        before - sessions.len()
    }

    fn session(&self, id: &str) -> ApiResult<SessionRef> {
        let key = Uuid::parse_str(id).map_err(|_| ApiError::not_found(id))?;
        let s = self.sessions.lock().unwrap().get(&key).cloned().ok_or_else(|| ApiError::not_found(id))?;
        s.lock().unwrap().last_access = Instant::now();
        Ok(s)
    }
}

pub fn router(state: AppState) -> Router {
    let limit = state.config.max_upload_bytes;
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session_info).delete(delete_session))
        .route("/sessions/{id}/slice", get(get_slice))
        .route("/sessions/{id}/strokes", post(add_strokes).delete(clear_strokes).get(get_strokes))
        .route("/sessions/{id}/segment", post(start_segment).get(segment_state))
        .route("/sessions/{id}/postedit", post(postedit))
        .route("/sessions/{id}/metrics", get(metrics))
        .route("/sessions/{id}/export", get(export))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

/// Serves until the process is stopped, evicting idle sessions in the background.
pub async fn serve(addr: SocketAddr, config: ServerConfig) -> std::io::Result<()> {
    let state = AppState::new(config);
    let sweeper = state.clone();
    let period = (sweeper.config.idle_timeout / 4).clamp(Duration::from_secs(1), Duration::from_secs(60));
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(period);
        loop {
            tick.tick().await;
            sweeper.evict_idle(Instant::now());
        }
    });
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> ApiResult<impl IntoResponse> {
    if body.is_empty() {
        return Err(ApiError::bad_request("request body must be a NRRD volume"));
    }
    let nrrd = parse_nrrd(&body)?;
    let vol = nrrd.volume;
    let id = Uuid::new_v4();
    let info = json!({
        "session_id": id.to_string(),
        "dims": vol.dims(),
        "spacing": vol.spacing(),
        "origin": vol.origin(),
    });
    state.sessions.lock().unwrap().insert(id, Arc::new(Mutex::new(Session::new(vol))));
    Ok((StatusCode::CREATED, Json(info)))
}

async fn session_info(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let s = state.session(&id)?;
    let s = s.lock().unwrap();
    let vol = &s.volume;
    Ok(Json(json!({
        "session_id": id,
        "dims": vol.dims(),
        "spacing": vol.spacing(),
        "origin": vol.origin(),
        "strokes": StrokeSummary::of(&s.strokes),
        "job": s.job,
        "has_segmentation": s.segmentation.is_some(),
        "history": s.history,
    })))
}

async fn delete_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    let key = Uuid::parse_str(&id).map_err(|_| ApiError::not_found(&id))?;
    match state.sessions.lock().unwrap().remove(&key) {
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => Err(ApiError::not_found(&id)),
    }
}

#[derive(Deserialize)]
struct SliceQuery {
    axis: String,
    index: usize,
    #[serde(default = "image_layer")]
    layer: Layer,
    format: Option<String>,
    window: Option<f32>,
    level: Option<f32>,
}

fn image_layer() -> Layer {
    Layer::Image
}

async fn get_slice(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<SliceQuery>,
) -> ApiResult<Response> {
    let s = state.session(&id)?;
    let axis: Axis = q.axis.parse().map_err(|e: growcut3d_core::Error| ApiError::bad_request(e.to_string()))?;
    let png = match q.format.as_deref() {
        None | Some("raw") => false,
        Some("png") if q.layer == Layer::Image => true,
        Some("png") => return Err(ApiError::bad_request("format=png is only available for the image layer")),
        Some(other) => return Err(ApiError::bad_request(format!("unknown format `{other}`"))),
    };

    let s = s.lock().unwrap();
    let dims = s.dims();
    let extent = axis.extent(dims);
    if q.index >= extent {
        return Err(ApiError::new(
            StatusCode::RANGE_NOT_SATISFIABLE,
            format!("{axis} index {} is outside 0..{extent}", q.index),
        ));
    }
    let (pixels, rows, cols, spacing, window) = match q.layer {
        Layer::Image => {
            let (dw, dl) = slice::default_window(&s.volume);
            let (w, l) = (q.window.unwrap_or(dw), q.level.unwrap_or(dl));
            if !(w.is_finite() && w >= 0.0 && l.is_finite()) {
                return Err(ApiError::bad_request("window must be finite and non-negative, level finite"));
            }
            let sl = extract_slice(&s.volume, axis, q.index)?;
            (slice::to_gray(&sl, w, l), sl.rows, sl.cols, sl.spacing, Some((w, l)))
        }
        Layer::Labels | Layer::Segmentation => {
            let labels = match (&q.layer, &s.segmentation) {
                (Layer::Segmentation, Some(seg)) => seg.clone(),
                (Layer::Segmentation, None) => s.volume.with_data(vec![0u8; dims.len()])?,
                _ => s.stroke_labels(),
            };
            let sl = extract_slice(&labels, axis, q.index)?;
            (sl.data, sl.rows, sl.cols, sl.spacing, None)
        }
    };
    drop(s);

    if png {
        let body = slice::encode_png(&pixels, rows, cols);
        return Ok((
            [
                (header::CONTENT_TYPE, "image/png".to_string()),
                (header::HeaderName::from_static("x-slice-spacing"), format!("{} {}", spacing[0], spacing[1])),
            ],
            body,
        )
            .into_response());
    }
    let head = SliceHeader {
        axis,
        index: q.index,
        layer: q.layer,
        rows,
        cols,
        spacing,
        dtype: "uint8".into(),
        window: window.map(|w| w.0),
        level: window.map(|w| w.1),
    };
    let (content_type, body) = slice::encode_multipart(&head, &pixels);
    Ok(([(header::CONTENT_TYPE, content_type)], body).into_response())
}

async fn add_strokes(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<impl IntoResponse> {
    let s = state.session(&id)?;
    let incoming = parse_strokes(&body)?;
    let mut s = s.lock().unwrap();
    if incoming.volume_dims != s.dims() {
        return Err(ApiError::unprocessable(format!(
            "strokes are for volume_dims {}, session volume is {}",
            incoming.volume_dims,
            s.dims()
        )));
    }
    let mut merged = s.strokes.clone();
    merged.extend(incoming)?;
    let conflicts = merged.conflicts();
    if !conflicts.is_empty() {
        return Err(growcut3d_core::Error::SeedConflict { voxels: conflicts }.into());
    }
    s.strokes = merged;
    Ok(Json(StrokeSummary::of(&s.strokes)))
}

async fn get_strokes(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let s = state.session(&id)?;
    let json = s.lock().unwrap().strokes.to_json();
    Ok(([(header::CONTENT_TYPE, "application/json")], json).into_response())
}

async fn clear_strokes(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let s = state.session(&id)?;
    let mut s = s.lock().unwrap();
    s.strokes.strokes.clear();
    Ok(Json(StrokeSummary::of(&s.strokes)))
}

/// Optional overrides of the default run configuration.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentRequest {
    connectivity: Option<Connectivity>,
    roi_margin: Option<usize>,
    max_iterations: Option<usize>,
    workers: Option<usize>,
    precompute_similarity: Option<bool>,
}

impl SegmentRequest {
    fn config(&self) -> GrowCutConfig {
        let d = GrowCutConfig::default();
        GrowCutConfig {
            connectivity: self.connectivity.unwrap_or(d.connectivity),
            roi_margin: self.roi_margin.unwrap_or(d.roi_margin),
            max_iterations: self.max_iterations.or(d.max_iterations),
            workers: self.workers.unwrap_or(d.workers),
            precompute_similarity: self.precompute_similarity.unwrap_or(d.precompute_similarity),
        }
    }
}

fn json_body<T: Default + serde::de::DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ApiError::unprocessable(format!("invalid request body: {e}")))
}

async fn start_segment(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<impl IntoResponse> {
    let s = state.session(&id)?;
    let req: SegmentRequest = json_body(&body)?;
    let config = req.config();
    config.validate()?;
    let (volume, strokes) = {
        let mut s = s.lock().unwrap();
        if s.is_running() {
            return Err(ApiError::conflict("a segmentation job is already running"));
        }
        let labels = s.strokes.labels();
        if labels.len() < 2 {
            return Err(ApiError::unprocessable(format!(
                "segmentation needs strokes with at least two labels, have {labels:?}"
            )));
        }
        s.job = JobState::Running;
        (Arc::clone(&s.volume), s.strokes.strokes.clone())
    };

    let delay = state.config.job_start_delay;
    let session = Arc::clone(&s);
    tokio::spawn(async move {
        if !delay.is_zero() {
            tokio::time::sleep(delay).await;
        }
        let outcome = tokio::task::spawn_blocking(move || growcut::run(&volume, &strokes, &config)).await;
        let mut s = session.lock().unwrap();
        s.job = match outcome {
            Ok(Ok((labels, stats))) => {
                s.segmentation = Some(labels);
                s.history.clear();
                JobState::Done { stats }
            }
            Ok(Err(e)) => JobState::Failed { reason: e.to_string() },
            Err(e) => JobState::Failed { reason: format!("job aborted: {e}") },
        };
    });
    Ok((StatusCode::ACCEPTED, Json(json!({ "job": JobState::Running }))))
}

async fn segment_state(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let s = state.session(&id)?;
    let job = s.lock().unwrap().job.clone();
    Ok(Json(job))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PosteditRequest {
    /// Comma-separated pipeline, e.g. `islands:keep_largest,dilate:1`.
    ops: String,
    connectivity: Option<Connectivity>,
    /// Foreground label of a multi-label segmentation; default 1.
    label: Option<u8>,
}

#[derive(Serialize)]
struct SegmentationSummary {
    voxel_count: usize,
    volume_mm3: f64,
    volume_cm3: f64,
    history: Vec<String>,
}

async fn postedit(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let s = state.session(&id)?;
    let req: PosteditRequest =
        serde_json::from_slice(&body).map_err(|e| ApiError::unprocessable(format!("invalid request body: {e}")))?;
    let ops: Vec<PostOp> = growcut3d_core::morphology::parse_pipeline(&req.ops)?;
    let conn = req.connectivity.unwrap_or_default();
    let mut s = s.lock().unwrap();
    if s.is_running() {
        return Err(ApiError::conflict("a segmentation job is running"));
    }
    let Some(seg) = &s.segmentation else {
        return Err(ApiError::conflict("no segmentation yet; run segment first"));
    };
    let edited = apply_pipeline(&seg.binarize(req.label.unwrap_or(1)), &ops, conn)?;
    let v = voxel_volume(&edited, edited.spacing())?;
    s.segmentation = Some(edited);
    s.history.push(ops.iter().map(ToString::to_string).collect::<Vec<_>>().join(","));
    Ok(Json(SegmentationSummary {
        voxel_count: v.voxel_count,
        volume_mm3: v.volume_mm3,
        volume_cm3: v.volume_cm3(),
        history: s.history.clone(),
    }))
}

#[derive(Deserialize)]
struct LabelQuery {
    label: Option<u8>,
}

async fn metrics(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<LabelQuery>,
) -> ApiResult<impl IntoResponse> {
    let s = state.session(&id)?;
    let s = s.lock().unwrap();
    let seg = s.segmentation.as_ref().ok_or_else(|| ApiError::conflict("no segmentation yet; run segment first"))?;
    let v = voxel_volume(&seg.binarize(q.label.unwrap_or(1)), seg.spacing())?;
    Ok(Json(json!({
        "voxel_count": v.voxel_count,
        "volume_mm3": v.volume_mm3,
        "volume_cm3": v.volume_cm3(),
    })))
}

#[derive(Deserialize)]
struct ExportQuery {
    encoding: Option<String>,
}

async fn export(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ExportQuery>,
) -> ApiResult<Response> {
    let encoding: Encoding = q.encoding.as_deref().unwrap_or("gzip").parse()?;
    let s = state.session(&id)?;
    let seg = s
        .lock()
        .unwrap()
        .segmentation
        .clone()
        .ok_or_else(|| ApiError::conflict("no segmentation yet; run segment first"))?;
    let bytes = seg.encode_nrrd(encoding)?;
    Ok((
        [
            (header::CONTENT_TYPE, "application/octet-stream".to_string()),
            (header::CONTENT_DISPOSITION, format!("attachment; filename=\"segmentation-{id}.nrrd\"")),
        ],
        bytes,
    )
        .into_response())
}
