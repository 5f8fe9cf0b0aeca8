//! HTTP/JSON API for interactive scene editing.
//!
//! | method | path | |
//! |---|---|---|
//! | `POST` | `/scenes` | create from a scene document; `201 {id, revision: 0}` |
//! | `GET` | `/scenes` | `[{id, revision}]` |
//! | `GET` | `/scenes/{id}` | `{id, revision, scene}` |
//! | `PUT` | `/scenes/{id}` | replace; needs `If-Match` |
//! | `POST` | `/scenes/{id}/keyframes` | `{target, frame, value?}` sets or (without `value`) removes a keyframe; needs `If-Match` |
//! | `GET` | `/scenes/{id}/preview/{frame}` | `?kind=depth\|id&width=&height=&scale=`, PNG |
//! | `GET` | `/scenes/{id}/camera.txt` | F lines of 12 reals |
//! | `POST` | `/scenes/{id}/validate` | `{violations, warnings}` for the body document, or the stored scene when the body is empty |
//!
//! Responses that depend on a scene carry its revision in `ETag` and
//! `X-Scene-Revision`. Errors are `{"error": ...}` with 400, 404, 409
//! (plus `current_revision`), 422 (plus `violations` when applicable) or
//! 428 when `If-Match` is missing.

pub mod error;
mod preview;
pub mod store;

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, HeaderName, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use cineforge_core::geometry::{Box3, Pose};
use cineforge_core::io::camera::write_camera_txt;
use cineforge_core::io::scene_doc::SceneDocument;
use cineforge_core::scene::{KeyValue, Target};
use serde::Deserialize;
use serde_json::json;

pub use error::ApiError;
pub use preview::{PreviewCache, PreviewKind, PreviewQuery};
pub use store::{SceneId, Snapshot, Store};

pub const REVISION_HEADER: HeaderName = HeaderName::from_static("x-scene-revision");

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    pub previews: Arc<PreviewCache>,
}

impl AppState {
    pub fn new(store: Store) -> AppState {
        AppState { store: Arc::new(store), previews: Arc::new(PreviewCache::default()) }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/scenes", post(create_scene).get(list_scenes))
        .route("/scenes/{id}", get(get_scene).put(put_scene))
        .route("/scenes/{id}/keyframes", post(edit_keyframe))
        .route("/scenes/{id}/preview/{frame}", get(preview::preview))
        .route("/scenes/{id}/camera.txt", get(camera_txt))
        .route("/scenes/{id}/validate", post(validate))
        .with_state(state)
}

/// Serves until the process is stopped.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}

pub(crate) fn parse_id(raw: &str) -> Result<SceneId, ApiError> {
    raw.parse().map_err(|_| ApiError::BadRequest(format!("scene id {raw:?} is not an integer")))
}

pub(crate) fn revision_headers(revision: u64) -> [(HeaderName, HeaderValue); 2] {
    [(header::ETAG, HeaderValue::from_str(&format!("\"{revision}\"")).expect("ascii")), (REVISION_HEADER, HeaderValue::from(revision))]
}

/// Reads `If-Match`; accepts `3`, `"3"` and `W/"3"`.
fn if_match(headers: &HeaderMap) -> Result<u64, ApiError> {
    let raw = headers.get(header::IF_MATCH).ok_or(ApiError::PreconditionRequired)?;
    let text = raw.to_str().map_err(|_| ApiError::BadRequest("If-Match is not ASCII".into()))?.trim();
    text.trim_start_matches("W/")
        .trim_matches('"')
        .parse()
        .map_err(|_| ApiError::BadRequest(format!("If-Match {text:?} is not a revision number")))
}

fn parse_document(body: &str) -> Result<SceneDocument, ApiError> {
    if let Err(e) = serde_json::from_str::<serde_json::Value>(body) {
        return Err(ApiError::BadRequest(format!("malformed JSON: {e}")));
    }
    SceneDocument::from_json(body).map_err(|e| ApiError::Schema(e.to_string()))
}

fn revision_body(id: SceneId, snap: &Snapshot) -> serde_json::Value {
    json!({ "id": id, "revision": snap.revision })
}

async fn create_scene(State(st): State<AppState>, body: String) -> Result<Response, ApiError> {
    let (id, snap) = st.store.create(parse_document(&body)?).await?;
    let location = HeaderValue::from_str(&format!("/scenes/{id}")).expect("ascii");
    Ok((StatusCode::CREATED, revision_headers(snap.revision), [(header::LOCATION, location)], Json(revision_body(id, &snap))).into_response())
}

async fn list_scenes(State(st): State<AppState>) -> Json<serde_json::Value> {
    let list: Vec<_> = st.store.list().await.into_iter().map(|(id, rev)| json!({ "id": id, "revision": rev })).collect();
    Json(json!(list))
}

async fn get_scene(State(st): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let id = parse_id(&id)?;
    let snap = st.store.get(id).await?;
    let body = json!({ "id": id, "revision": snap.revision, "scene": &*snap.doc });
    Ok((revision_headers(snap.revision), Json(body)).into_response())
}

async fn put_scene(State(st): State<AppState>, Path(id): Path<String>, headers: HeaderMap, body: String) -> Result<Response, ApiError> {
    let id = parse_id(&id)?;
    let expected = if_match(&headers)?;
    let doc = parse_document(&body)?;
    let snap = st.store.mutate(id, expected, |_| Ok(doc)).await?;
    Ok((revision_headers(snap.revision), Json(revision_body(id, &snap))).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct KeyframeEdit {
    target: Target,
    frame: u32,
    #[serde(default)]
    value: Option<serde_json::Value>,
}

async fn edit_keyframe(State(st): State<AppState>, Path(id): Path<String>, headers: HeaderMap, body: String) -> Result<Response, ApiError> {
    let id = parse_id(&id)?;
    let expected = if_match(&headers)?;
    if let Err(e) = serde_json::from_str::<serde_json::Value>(&body) {
        return Err(ApiError::BadRequest(format!("malformed JSON: {e}")));
    }
    let edit: KeyframeEdit = serde_json::from_str(&body).map_err(|e| ApiError::Schema(e.to_string()))?;
    let value = match (&edit.value, edit.target) {
        (None, _) => None,
        (Some(v), Target::Camera) => {
            Some(KeyValue::Pose(serde_json::from_value::<Pose>(v.clone()).map_err(|e| ApiError::Schema(format!("camera keyframe: {e}")))?))
        }
        (Some(v), Target::Entity(_)) => {
            Some(KeyValue::Box(serde_json::from_value::<Box3>(v.clone()).map_err(|e| ApiError::Schema(format!("entity keyframe: {e}")))?))
        }
    };
    let snap = st
        .store
        .mutate(id, expected, |cur| {
            let edited = match value {
                Some(v) => cur.scene.set_keyframe(edit.target, edit.frame, v),
                None => cur.scene.remove_keyframe(edit.target, edit.frame),
            }
            .map_err(|e| ApiError::Schema(e.to_string()))?;
            Ok(cur.doc.with_scene(&edited))
        })
        .await?;
    Ok((revision_headers(snap.revision), Json(revision_body(id, &snap))).into_response())
}

async fn camera_txt(State(st): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let snap = st.store.get(parse_id(&id)?).await?;
    let text = write_camera_txt(&snap.scene.export_camera_rt());
    Ok((revision_headers(snap.revision), [(header::CONTENT_TYPE, "text/plain; charset=utf-8")], text).into_response())
}

async fn validate(State(st): State<AppState>, Path(id): Path<String>, body: String) -> Result<Response, ApiError> {
    let snap = st.store.get(parse_id(&id)?).await?;
    let scene = if body.trim().is_empty() { (*snap.scene).clone() } else { parse_document(&body)?.to_scene() };
    let warnings: Vec<String> = scene.warnings().iter().map(|w| w.to_string()).collect();
    let body = json!({ "violations": error::violation_list(&scene.validate()), "warnings": warnings });
    Ok((revision_headers(snap.revision), Json(body)).into_response())
}
