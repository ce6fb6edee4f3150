//! HTTP interface to the fusion pipeline: upload an image once, then
//! request fused results, confidence maps and metrics for any parameters.
//!
//! Routes:
//!
//! - `POST /api/sessions`: multipart upload. Fields: `image` (required),
//!   `clean`, `hr`, `noise_kind`, `noise_sigma`, `noise_seed`, `scale`.
//!   With a noise spec the upload is the clean image and the noisy input is
//!   synthesised from it. With `hr` the session runs in super-resolution
//!   mode.
//! - `GET /api/sessions/{id}/fused?method&w&guided&threshold&...` (PNG)
//! - `GET /api/sessions/{id}/confidence?format=json|png&threshold`
//! - `GET /api/sessions/{id}/metrics?method&w&...` (JSON); `of=noisy`,
//!   `of=reliable` or `of=dnn` score an input instead of the fused result.
//! - `GET /api/sessions/{id}/error?method&w&...&gain` (PNG)
//! - `GET /api/sessions/{id}/{reliable|dnn|residual|noisy}` (PNG)

mod error;
mod query;
mod sessions;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::SystemTime;

use axum::body::Bytes;
use axum::extract::multipart::MultipartError;
use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::header::CONTENT_TYPE;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ccid_core::fusion::fuse;
use ccid_core::imagecore::{add_noise, decode_image, encode_png_gray, encode_png_rgb};
use ccid_core::metrics::{quality, reportable_psnr};
use ccid_core::pipeline::{Artifacts, Mode, Pipeline};
use ccid_core::visual::{colorize_confidence, error_map, residual_view};
use ccid_core::{ConfidenceMap, FilterKind, Image, NoiseKind, NoiseSpec, ReliableFilterSpec};
use serde::Serialize;

pub use error::{ApiError, ApiResult};
pub use sessions::{Session, SessionStore, DEFAULT_CAPACITY};

/// Largest accepted request body.
pub const MAX_UPLOAD_BYTES: usize = 16 * 1024 * 1024;

/// How often the expensive models have run, for cache verification.
#[derive(Debug, Default)]
pub struct Counters {
    pub denoiser_runs: AtomicUsize,
    pub confidence_runs: AtomicUsize,
}

#[derive(Debug)]
struct Inner {
    pipeline: Pipeline,
    default_filter: ReliableFilterSpec,
    sessions: Mutex<SessionStore>,
    counters: Counters,
}

/// Shared server state: read-only models plus the session store.
#[derive(Clone, Debug)]
pub struct AppState {
    inner: Arc<Inner>,
}

impl AppState {
    pub fn new(pipeline: Pipeline) -> Self {
        Self::with_capacity(pipeline, DEFAULT_CAPACITY)
    }

    pub fn with_capacity(pipeline: Pipeline, capacity: usize) -> Self {
        Self {
            inner: Arc::new(Inner {
                pipeline,
                default_filter: ReliableFilterSpec::default(),
                sessions: Mutex::new(SessionStore::new(capacity)),
                counters: Counters::default(),
            }),
        }
    }

    pub fn counters(&self) -> &Counters {
        &self.inner.counters
    }

    pub fn session_count(&self) -> usize {
        self.inner.sessions.lock().expect("session lock").len()
    }

    fn session(&self, id: &str) -> ApiResult<Arc<Session>> {
        self.inner
            .sessions
            .lock()
            .expect("session lock")
            .get(id)
            .ok_or_else(|| ApiError::not_found(format!("unknown session {id:?}")))
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}/{view}", get(view))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .with_state(state)
}

pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await
}

#[derive(Debug, Serialize)]
struct Created {
    id: String,
    dims: [usize; 2],
}

fn multipart_error(err: MultipartError) -> ApiError {
    ApiError::new(err.status(), err.body_text())
}

fn text_field<T: std::str::FromStr>(fields: &HashMap<String, Bytes>, key: &str) -> ApiResult<Option<T>> {
    let Some(raw) = fields.get(key) else {
        return Ok(None);
    };
    let text = std::str::from_utf8(raw).map_err(|_| ApiError::unprocessable(format!("{key:?} is not UTF-8")))?;
    text.trim()
        .parse()
        .map(Some)
        .map_err(|_| ApiError::unprocessable(format!("invalid value {text:?} for {key:?}")))
}

fn image_field(fields: &HashMap<String, Bytes>, key: &str) -> ApiResult<Option<Image<f64>>> {
    fields
        .get(key)
        .map(|bytes| decode_image(bytes).map_err(|e| ApiError::bad_request(format!("{key}: {e}"))))
        .transpose()
}

async fn create_session(State(app): State<AppState>, mut multipart: Multipart) -> ApiResult<Json<Created>> {
    let mut fields = HashMap::new();
    while let Some(field) = multipart.next_field().await.map_err(multipart_error)? {
        let name = field.name().unwrap_or_default().to_string();
        let data = field.bytes().await.map_err(multipart_error)?;
        fields.insert(name, data);
    }
    let session = tokio::task::spawn_blocking(move || build_session(&fields))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    let dims = session.dims();
    let id = session.id.clone();
    app.inner.sessions.lock().expect("session lock").insert(session);
    Ok(Json(Created {
        id,
        dims: [dims.0, dims.1],
    }))
}

fn build_session(fields: &HashMap<String, Bytes>) -> ApiResult<Session> {
    let image = image_field(fields, "image")?.ok_or_else(|| ApiError::bad_request("missing \"image\" upload"))?;
    let mut clean = image_field(fields, "clean")?;
    let high = image_field(fields, "hr")?;
    let sigma: Option<f64> = text_field(fields, "noise_sigma")?;
    let kind: NoiseKind = text_field(fields, "noise_kind")?.unwrap_or(NoiseKind::Gaussian);
    let seed: u64 = text_field(fields, "noise_seed")?.unwrap_or(0);
    let scale: usize = text_field(fields, "scale")?.unwrap_or(4);

    let noisy = match sigma {
        Some(sigma) => {
            if clean.is_some() {
                return Err(ApiError::unprocessable("a noise spec makes the upload the clean image; drop \"clean\""));
            }
            let spec = NoiseSpec { kind, sigma, seed };
            spec.validate()?;
            clean = Some(image.clone());
            add_noise(&image, &spec)?
        }
        None => image,
    };
    let (mode, out_dims) = match &high {
        Some(hr) => {
            let spec = ReliableFilterSpec {
                scale,
                ..ReliableFilterSpec::with_kind(FilterKind::BicubicUpscale)
            };
            spec.validate()?;
            let expected = (noisy.height() * scale, noisy.width() * scale);
            if hr.dims() != expected {
                return Err(ApiError::unprocessable(format!(
                    "hr image is {}x{}, expected {}x{}",
                    hr.height(),
                    hr.width(),
                    expected.0,
                    expected.1
                )));
            }
            (Mode::SuperResolution, expected)
        }
        None => (Mode::Denoise, noisy.dims()),
    };
    if let Some(c) = &clean {
        if c.dims() != out_dims {
            return Err(ApiError::unprocessable("ground truth dims do not match the output dims"));
        }
    }
    Ok(Session {
        id: format!("{:032x}", rand::random::<u128>()),
        mode,
        noisy,
        clean,
        high,
        scale,
        created_at: SystemTime::now(),
        artifacts: Mutex::default(),
    })
}

/// Cached artifacts for the filter selected in `q`, computed on first use.
fn artifacts(app: &AppState, session: &Session, q: &query::Query) -> ApiResult<Arc<Artifacts>> {
    let requested = query::filter_spec(q)?;
    let spec = match session.mode {
        Mode::Denoise => requested.unwrap_or_else(|| app.inner.default_filter.clone()),
        Mode::SuperResolution => {
            if requested.is_some_and(|s| s.kind != FilterKind::BicubicUpscale) {
                return Err(ApiError::unprocessable("super-resolution sessions use bicubic_upscale"));
            }
            ReliableFilterSpec {
                scale: session.scale,
                ..ReliableFilterSpec::with_kind(FilterKind::BicubicUpscale)
            }
        }
    };
    let mut cache = session.artifacts.lock().expect("artifact lock");
    if let Some(found) = cache.get(&spec.fingerprint()) {
        return Ok(found.clone());
    }
    let computed = match session.mode {
        Mode::Denoise => {
            let pipeline = &app.inner.pipeline;
            let a = pipeline.denoise(&session.noisy, &spec)?;
            app.inner.counters.denoiser_runs.fetch_add(1, Ordering::SeqCst);
            if a.confidence.is_some() {
                app.inner.counters.confidence_runs.fetch_add(1, Ordering::SeqCst);
            }
            a
        }
        Mode::SuperResolution => {
            let high = session.high.as_ref().expect("super-resolution session has an hr image");
            Pipeline::super_resolve(&session.noisy, high, &spec)?
        }
    };
    let computed = Arc::new(computed);
    cache.insert(spec.fingerprint(), computed.clone());
    Ok(computed)
}

fn fused(app: &AppState, session: &Session, q: &query::Query) -> ApiResult<(Arc<Artifacts>, Image<f64>)> {
    let params = query::fusion_params(q)?;
    let a = artifacts(app, session, q)?;
    let conf = if params.guided {
        Some(confidence_of(session, &a)?)
    } else {
        None
    };
    let out = fuse(&a.reliable, &a.dnn, conf, &params)?;
    Ok((a, out))
}

fn confidence_of<'a>(session: &Session, a: &'a Artifacts) -> ApiResult<&'a ConfidenceMap<f64>> {
    if session.mode == Mode::SuperResolution {
        return Err(ApiError::conflict("no confidence map in super-resolution mode"));
    }
    a.confidence
        .as_ref()
        .ok_or_else(|| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "confidence model not loaded"))
}

fn clean_of(session: &Session) -> ApiResult<&Image<f64>> {
    session
        .clean
        .as_ref()
        .ok_or_else(|| ApiError::conflict("session has no ground truth"))
}

fn png(bytes: Vec<u8>) -> Response {
    ([(CONTENT_TYPE, "image/png")], bytes).into_response()
}

#[derive(Debug, Serialize)]
struct ConfidenceJson<'a> {
    gh: usize,
    gw: usize,
    values: &'a [f64],
}

#[derive(Debug, Serialize)]
struct MetricsJson {
    psnr: f64,
    ssim: f64,
    mse: f64,
}

fn render(app: &AppState, session: &Session, view: &str, q: &query::Query) -> ApiResult<Response> {
    Ok(match view {
        "noisy" => png(encode_png_gray(&session.noisy)),
        "reliable" => png(encode_png_gray(&artifacts(app, session, q)?.reliable)),
        "dnn" => png(encode_png_gray(&artifacts(app, session, q)?.dnn)),
        "residual" => png(encode_png_gray(&residual_view(&artifacts(app, session, q)?.residual))),
        "fused" => png(encode_png_gray(&fused(app, session, q)?.1)),
        "confidence" => {
            let a = artifacts(app, session, q)?;
            let conf = confidence_of(session, &a)?;
            match query::string(q, "format").unwrap_or("json") {
                "json" => Json(ConfidenceJson {
                    gh: conf.rows(),
                    gw: conf.cols(),
                    values: conf.values(),
                })
                .into_response(),
                "png" => {
                    let (rgb, h, w) = colorize_confidence(conf, query::threshold(q)?, 8)?;
                    png(encode_png_rgb(&rgb, h, w))
                }
                other => return Err(ApiError::unprocessable(format!("unknown format {other:?}"))),
            }
        }
        "metrics" => {
            let clean = clean_of(session)?;
            let m = match query::string(q, "of").unwrap_or("fused") {
                "fused" => quality(&fused(app, session, q)?.1, clean)?,
                "noisy" if session.mode == Mode::Denoise => quality(&session.noisy, clean)?,
                "reliable" => quality(&artifacts(app, session, q)?.reliable, clean)?,
                "dnn" => quality(&artifacts(app, session, q)?.dnn, clean)?,
                other => return Err(ApiError::unprocessable(format!("cannot score {other:?}"))),
            };
            Json(MetricsJson {
                psnr: reportable_psnr(m.psnr),
                ssim: m.ssim,
                mse: m.mse,
            })
            .into_response()
        }
        "error" => {
            let clean = clean_of(session)?;
            let gain = query::number(q, "gain")?.unwrap_or(4.0);
            let (_, out) = fused(app, session, q)?;
            png(encode_png_gray(&error_map(&out, clean, gain)?))
        }
        other => return Err(ApiError::not_found(format!("unknown view {other:?}"))),
    })
}

async fn view(
    State(app): State<AppState>,
    Path((id, view)): Path<(String, String)>,
    Query(q): Query<query::Query>,
) -> ApiResult<Response> {
    let session = app.session(&id)?;
    tokio::task::spawn_blocking(move || render(&app, &session, &view, &q))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
}
