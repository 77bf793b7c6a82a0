use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Result;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::Deserialize;
use swp_core::cnn::WetnessClass;
use swp_core::dataset::{
    agreement_report, annotations_to_jsonl, AnnotationRecord, AnnotationStore, DatasetManifest, DiskVideo,
    FrameSource,
};
use swp_core::imaging::encode_png;
use swp_core::Error;

use crate::cli::ServeArgs;
use crate::commands::load_manifest;
use crate::failure::Failure;

struct Inner {
    manifest: DatasetManifest,
    videos: HashMap<String, DiskVideo>,
    store: AnnotationStore,
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    /// Scans every video's frame directory once.
    pub fn new(manifest: DatasetManifest, annotations: impl Into<PathBuf>) -> swp_core::Result<Self> {
        let videos = manifest
            .videos
            .iter()
            .map(|v| Ok((v.video_id.clone(), manifest.open(&v.video_id)?)))
            .collect::<swp_core::Result<_>>()?;
        Ok(Self(Arc::new(Inner {
            manifest,
            videos,
            store: AnnotationStore::new(annotations),
        })))
    }
}

pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(serde_json::json!({ "error": self.1 }))).into_response()
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Coverage(_) => StatusCode::UNPROCESSABLE_ENTITY,
            Error::Dataset(_) | Error::InvalidBox(_) | Error::Config(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

fn not_found(what: String) -> ApiError {
    ApiError(StatusCode::NOT_FOUND, what)
}

#[derive(Deserialize)]
pub struct AnnotatorQuery {
    annotator: String,
}

impl AppState {
    fn video(&self, id: &str) -> Result<&DiskVideo, ApiError> {
        self.0
            .videos
            .get(id)
            .ok_or_else(|| not_found(format!("unknown video {id:?}")))
    }
}

async fn manifest(State(s): State<AppState>) -> Json<DatasetManifest> {
    Json(s.0.manifest.clone())
}

async fn classes() -> Json<[&'static str; 3]> {
    Json(WetnessClass::ALL.map(|c| c.as_str()))
}

async fn frame(State(s): State<AppState>, Path((video, idx)): Path<(String, u32)>) -> Result<Response, ApiError> {
    let v = s.video(&video)?;
    if idx == 0 || idx > v.frame_count() {
        return Err(not_found(format!("{video} has no frame {idx}")));
    }
    let st = s.clone();
    let png = tokio::task::spawn_blocking(move || -> swp_core::Result<Vec<u8>> {
        encode_png(&st.video(&video).map_err(|e| Error::Dataset(e.1))?.frame(idx)?)
    })
    .await
    .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

async fn get_annotations(
    State(s): State<AppState>,
    Path(video): Path<String>,
    Query(q): Query<AnnotatorQuery>,
) -> Result<Response, ApiError> {
    s.video(&video)?;
    let records = s.0.store.load(&video, &q.annotator)?;
    let body = annotations_to_jsonl(&records)?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

async fn post_annotation(
    State(s): State<AppState>,
    Path(video): Path<String>,
    Query(q): Query<AnnotatorQuery>,
    Json(record): Json<AnnotationRecord>,
) -> Result<StatusCode, ApiError> {
    let count = s.video(&video)?.frame_count();
    record.validate(Some(count))?;
    let st = s.clone();
    tokio::task::spawn_blocking(move || st.0.store.upsert(&video, &q.annotator, record))
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(StatusCode::NO_CONTENT)
}

async fn agreement(State(s): State<AppState>, Path(video): Path<String>) -> Result<Response, ApiError> {
    s.video(&video)?;
    let labels = s.0.store.labels(&video)?;
    Ok(Json(agreement_report(&labels)?).into_response())
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/manifest", get(manifest))
        .route("/api/classes", get(classes))
        .route("/api/frame/{video}/{idx}", get(frame))
        .route("/api/annotations/{video}", get(get_annotations).post(post_annotation))
        .route("/api/agreement/{video}", get(agreement))
        .with_state(state)
}

pub fn serve(a: &ServeArgs) -> Result<()> {
    let manifest = load_manifest(&a.manifest)?;
    let state = AppState::new(manifest, &a.annotations).map_err(|e| Failure::Config(e.to_string()))?;
    std::fs::create_dir_all(&a.annotations)?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(("0.0.0.0", a.port))
            .await
            .map_err(|e| Failure::Config(format!("cannot bind port {}: {e}", a.port)))?;
        eprintln!("serving on http://{}", listener.local_addr()?);
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}
