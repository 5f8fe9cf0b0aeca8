//! Scene sessions with revisions, optionally persisted to a data directory.
//!
//! Each scene lives in `<data_dir>/<id>.json` as `{"revision": r, "scene": <document>}`,
//! rewritten atomically on every accepted mutation. Mutations of one scene
//! are serialized by its write lock; readers clone an `Arc` snapshot and never
//! see a half-applied change.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use cineforge_core::io::scene_doc::SceneDocument;
use cineforge_core::io::{read_text, write_atomic, FormatError};
use cineforge_core::scene::{Scene, Violation};
use serde::{Deserialize, Serialize};
use tokio::sync::RwLock;

use crate::error::ApiError;

pub type SceneId = u64;

/// One immutable revision of a scene.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub revision: u64,
    pub doc: Arc<SceneDocument>,
    pub scene: Arc<Scene>,
}

#[derive(Serialize, Deserialize)]
struct StoredScene {
    revision: u64,
    scene: SceneDocument,
}

#[derive(Default)]
pub struct Store {
    sessions: RwLock<HashMap<SceneId, Arc<RwLock<Snapshot>>>>,
    next_id: AtomicU64,
    data_dir: Option<PathBuf>,
}

impl Store {
    pub fn in_memory() -> Store {
        Store { next_id: AtomicU64::new(1), ..Default::default() }
    }

    /// Opens `dir`, creating it if needed, and loads every stored scene.
    pub fn open(dir: &Path) -> Result<Store, FormatError> {
        std::fs::create_dir_all(dir)?;
        let mut sessions = HashMap::new();
        let mut max_id = 0;
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            let Some(id) = path
                .file_name()
                .and_then(|n| n.to_str())
                .and_then(|n| n.strip_suffix(".json"))
                .and_then(|n| n.parse::<SceneId>().ok())
            else {
                continue;
            };
            let stored: StoredScene = serde_json::from_str(&read_text(&path)?)
                .map_err(|e| FormatError::File { path: path.clone(), source: Box::new(FormatError::Invalid(e.to_string())) })?;
            let snap = snapshot(stored.revision, stored.scene);
            sessions.insert(id, Arc::new(RwLock::new(snap)));
            max_id = max_id.max(id);
        }
        log::info!("loaded {} scene(s) from {}", sessions.len(), dir.display());
        Ok(Store { sessions: RwLock::new(sessions), next_id: AtomicU64::new(max_id + 1), data_dir: Some(dir.to_path_buf()) })
    }

    pub async fn create(&self, doc: SceneDocument) -> Result<(SceneId, Snapshot), ApiError> {
        let snap = checked_snapshot(0, doc)?;
        let id = self.next_id.fetch_add(1, Ordering::SeqCst);
        self.persist(id, &snap).await?;
        self.sessions.write().await.insert(id, Arc::new(RwLock::new(snap.clone())));
        log::debug!("created scene {id}");
        Ok((id, snap))
    }

    /// `(id, revision)` of every scene, by id.
    pub async fn list(&self) -> Vec<(SceneId, u64)> {
        let sessions: Vec<_> = self.sessions.read().await.iter().map(|(&id, s)| (id, s.clone())).collect();
        let mut out = Vec::with_capacity(sessions.len());
        for (id, s) in sessions {
            out.push((id, s.read().await.revision));
        }
        out.sort_unstable();
        out
    }

    async fn session(&self, id: SceneId) -> Result<Arc<RwLock<Snapshot>>, ApiError> {
        self.sessions.read().await.get(&id).cloned().ok_or(ApiError::NotFound(id))
    }

    pub async fn get(&self, id: SceneId) -> Result<Snapshot, ApiError> {
        Ok(self.session(id).await?.read().await.clone())
    }

    /// Applies `edit` to the current revision if it equals `expected`.
    pub async fn mutate<F>(&self, id: SceneId, expected: u64, edit: F) -> Result<Snapshot, ApiError>
    where
        F: FnOnce(&Snapshot) -> Result<SceneDocument, ApiError>,
    {
        let session = self.session(id).await?;
        let mut current = session.write().await;
        if current.revision != expected {
            return Err(ApiError::Conflict { expected, current: current.revision });
        }
        let next = checked_snapshot(current.revision + 1, edit(&current)?)?;
        self.persist(id, &next).await?;
        *current = next.clone();
        Ok(next)
    }

    async fn persist(&self, id: SceneId, snap: &Snapshot) -> Result<(), ApiError> {
        let Some(dir) = &self.data_dir else {
            return Ok(());
        };
        let stored = StoredScene { revision: snap.revision, scene: (*snap.doc).clone() };
        let mut text = serde_json::to_string_pretty(&stored).expect("documents always serialize");
        text.push('\n');
        let path = dir.join(format!("{id}.json"));
        tokio::task::spawn_blocking(move || write_atomic(&path, text.as_bytes()))
            .await
            .map_err(|e| ApiError::Internal(e.to_string()))?
            .map_err(|e| ApiError::Internal(e.to_string()))
    }
}

fn snapshot(revision: u64, doc: SceneDocument) -> Snapshot {
    let scene = doc.to_scene();
    Snapshot { revision, doc: Arc::new(doc), scene: Arc::new(scene) }
}

fn checked_snapshot(revision: u64, doc: SceneDocument) -> Result<Snapshot, ApiError> {
    let snap = snapshot(revision, doc);
    let violations: Vec<Violation> = snap.scene.validate();
    if violations.is_empty() {
        Ok(snap)
    } else {
        Err(ApiError::Invalid(violations))
    }
}
