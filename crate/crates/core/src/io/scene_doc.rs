//! Versioned JSON scene documents.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "fps": 8.0,
//!   "frame_count": 16,
//!   "entities": [
//!     {"id": 1, "label": "crate", "keyframes": {
//!       "0": {"center": [0.0, -0.5, 0.0], "half_extents": [0.5, 0.5, 0.5], "rotation": [1.0, 0.0, 0.0, 0.0]}}}
//!   ],
//!   "camera": {
//!     "intrinsics": {"fx": 500.0, "fy": 500.0, "cx": 320.0, "cy": 240.0, "width": 640, "height": 480},
//!     "keyframes": {"0": {"rotation": [1.0, 0.0, 0.0, 0.0], "translation": [0.0, 0.0, 5.0]}}
//!   }
//! }
//! ```
//!
//! Rotations are unit quaternions `[w, x, y, z]`; camera keyframes are
//! world-to-camera. Unknown top-level fields survive a load/save cycle.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{read_text, write_atomic, FormatError, InFile};
use crate::geometry::{Box3, Intrinsics, Pose};
use crate::scene::{CameraTrack, Entity, Scene};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityDoc {
    pub id: u32,
    pub label: String,
    pub keyframes: BTreeMap<u32, Box3>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraDoc {
    pub intrinsics: Intrinsics,
    pub keyframes: BTreeMap<u32, Pose>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDocument {
    pub schema_version: u32,
    pub fps: f64,
    pub frame_count: u32,
    pub entities: Vec<EntityDoc>,
    pub camera: CameraDoc,
    /// Fields this version does not know, kept verbatim.
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl SceneDocument {
    pub fn from_scene(scene: &Scene) -> SceneDocument {
        SceneDocument {
            schema_version: SCHEMA_VERSION,
            fps: scene.fps,
            frame_count: scene.frame_count,
            entities: scene
                .entities
                .iter()
                .map(|e| EntityDoc { id: e.id, label: e.label.clone(), keyframes: e.track.clone() })
                .collect(),
            camera: CameraDoc { intrinsics: scene.camera.intrinsics, keyframes: scene.camera.keyframes.clone() },
            extra: Map::new(),
        }
    }

    pub fn to_scene(&self) -> Scene {
        Scene {
            frame_count: self.frame_count,
            fps: self.fps,
            entities: self
                .entities
                .iter()
                .map(|e| Entity { id: e.id, label: e.label.clone(), track: e.keyframes.clone() })
                .collect(),
            camera: CameraTrack { keyframes: self.camera.keyframes.clone(), intrinsics: self.camera.intrinsics },
        }
    }

    /// Replaces the scene content, keeping unknown fields.
    pub fn with_scene(&self, scene: &Scene) -> SceneDocument {
        SceneDocument { extra: self.extra.clone(), ..SceneDocument::from_scene(scene) }
    }

    /// Canonical text: two-space indentation, trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<SceneDocument, FormatError> {
        let value: Value = serde_json::from_str(text).map_err(|e| parse_error(text, &e))?;
        match value.get("schema_version").map(Value::as_u64) {
            Some(Some(v)) if v == SCHEMA_VERSION as u64 => {}
            Some(Some(v)) => return Err(FormatError::SchemaVersionUnsupported { found: v, supported: SCHEMA_VERSION }),
            Some(None) => return Err(FormatError::Invalid("schema_version must be a non-negative integer".into())),
            None => return Err(FormatError::Invalid("missing schema_version".into())),
        }
        // parse again from text so structural errors carry positions
        serde_json::from_str(text).map_err(|e| parse_error(text, &e))
    }
}

fn parse_error(text: &str, e: &serde_json::Error) -> FormatError {
    let (line, column) = (e.line(), e.column());
    let offset = if e.is_eof() { text.len() } else { byte_offset(text, line, column) };
    FormatError::Parse { offset, line, column, message: e.to_string() }
}

/// Byte offset of a 1-based line and column (column counted in bytes).
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let start: usize = text.split_inclusive('\n').take(line - 1).map(str::len).sum();
    (start + column.saturating_sub(1)).min(text.len())
}

pub fn save_scene(path: &Path, doc: &SceneDocument) -> Result<(), FormatError> {
    write_atomic(path, doc.to_json().as_bytes())
}

pub fn load_scene(path: &Path) -> Result<SceneDocument, FormatError> {
    let text = read_text(path)?;
    SceneDocument::from_json(&text).in_file(path)
}
