//! Frame previews rendered from an immutable scene snapshot.

use std::collections::{HashMap, VecDeque};
use std::sync::Mutex;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::header;
use axum::response::{IntoResponse, Response};
use cineforge_core::io::raster::{encode_depth_png16, encode_idmap_png, DEFAULT_DEPTH_SCALE};
use cineforge_core::render::{render_frame, RenderSettings};
use serde::Deserialize;

use crate::{parse_id, revision_headers, ApiError, AppState, SceneId};

/// Largest preview side, in pixels.
pub const MAX_PREVIEW_SIDE: u32 = 4096;
const CACHE_CAPACITY: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreviewKind {
    #[default]
    Depth,
    Id,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct PreviewQuery {
    pub kind: Option<String>,
    pub width: Option<String>,
    pub height: Option<String>,
    /// Meters per PNG16 unit for depth previews.
    pub scale: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct PreviewKey {
    id: SceneId,
    revision: u64,
    frame: u32,
    kind: PreviewKind,
    width: u32,
    height: u32,
    scale_bits: u64,
}

/// Encoded previews keyed by everything that determines their bytes; the
/// oldest entry is evicted first.
#[derive(Default)]
pub struct PreviewCache {
    inner: Mutex<(HashMap<PreviewKey, Bytes>, VecDeque<PreviewKey>)>,
}

impl PreviewCache {
    fn get(&self, k: &PreviewKey) -> Option<Bytes> {
        self.inner.lock().expect("cache lock").0.get(k).cloned()
    }

    fn put(&self, k: PreviewKey, v: Bytes) {
        let mut g = self.inner.lock().expect("cache lock");
        let (map, order) = &mut *g;
        if map.insert(k, v).is_none() {
            order.push_back(k);
        }
        while order.len() > CACHE_CAPACITY {
            if let Some(old) = order.pop_front() {
                map.remove(&old);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("cache lock").0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn parse_side(name: &str, raw: Option<&str>) -> Result<Option<u32>, ApiError> {
    raw.map(|r| match r.parse::<u32>() {
        Ok(v) if (1..=MAX_PREVIEW_SIDE).contains(&v) => Ok(v),
        _ => Err(ApiError::BadRequest(format!("{name} must be an integer in [1, {MAX_PREVIEW_SIDE}], got {r:?}"))),
    })
    .transpose()
}

pub(crate) async fn preview(
    State(st): State<AppState>,
    Path((id, frame)): Path<(String, String)>,
    Query(q): Query<PreviewQuery>,
) -> Result<Response, ApiError> {
    let id = parse_id(&id)?;
    let frame: u32 = frame.parse().map_err(|_| ApiError::BadRequest(format!("frame {frame:?} is not a non-negative integer")))?;
    let kind = match q.kind.as_deref() {
        None | Some("depth") => PreviewKind::Depth,
        Some("id") => PreviewKind::Id,
        Some(other) => return Err(ApiError::BadRequest(format!("kind must be depth or id, got {other:?}"))),
    };
    let width = parse_side("width", q.width.as_deref())?;
    let height = parse_side("height", q.height.as_deref())?;
    let scale = match q.scale.as_deref() {
        None => DEFAULT_DEPTH_SCALE,
        Some(r) => match r.parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => v,
            _ => return Err(ApiError::BadRequest(format!("scale must be a positive number, got {r:?}"))),
        },
    };

    let snap = st.store.get(id).await?;
    if frame >= snap.scene.frame_count {
        return Err(ApiError::BadRequest(format!("frame {frame} is outside [0, {})", snap.scene.frame_count)));
    }
    let settings = RenderSettings { width, height, ..Default::default() };
    let k = settings.intrinsics_for(&snap.scene.camera.intrinsics);
    let key = PreviewKey {
        id,
        revision: snap.revision,
        frame,
        kind,
        width: k.width,
        height: k.height,
        scale_bits: if kind == PreviewKind::Depth { scale.to_bits() } else { 0 },
    };
    let bytes = match st.previews.get(&key) {
        Some(b) => b,
        None => {
            let scene = snap.scene.clone();
            let encoded = tokio::task::spawn_blocking(move || {
                let sample = scene.resolve(frame).map_err(|e| ApiError::BadRequest(e.to_string()))?;
                let (depth, ids) = render_frame(&sample, &scene.camera.intrinsics, &settings);
                match kind {
                    PreviewKind::Depth => encode_depth_png16(&depth, scale),
                    PreviewKind::Id => encode_idmap_png(&ids),
                }
                .map_err(|e| ApiError::Schema(e.to_string()))
            })
            .await
            .map_err(|e| ApiError::Internal(e.to_string()))??;
            let b = Bytes::from(encoded);
            st.previews.put(key, b.clone());
            b
        }
    };
    Ok((revision_headers(snap.revision), [(header::CONTENT_TYPE, "image/png")], bytes).into_response())
}
