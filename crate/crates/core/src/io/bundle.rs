//! Condition bundles: everything a video generator is conditioned on.
//!
//! ```text
//! bundle/
//!   depth/00000.png    16-bit depth (or .pfm)
//!   idmap/00000.png    8-bit indexed entity ids
//!   camera.txt         F lines of 12 reals
//!   labels.json        {"1": "crate", ...}
//!   meta.json          fps, frame_count, intrinsics, depth encoding
//! ```
//!
//! The directory is assembled under a temporary name next to the target and
//! renamed into place when complete.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::camera::{parse_camera_any, write_camera_txt, CameraFile};
use super::raster::{decode_depth_pfm, decode_depth_png16, decode_idmap_png, encode_depth_pfm, encode_depth_png16, encode_idmap_png, DEFAULT_DEPTH_SCALE};
use super::{frame_name, read_file, read_text, FormatError, InFile};
use crate::geometry::Intrinsics;
use crate::par::{self, Exec};
use crate::raster::{DepthMap, IdMap};
use crate::render::{render_sequence_with, RenderSettings};
use crate::scene::{CameraSequence, Scene};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "encoding", rename_all = "lowercase")]
pub enum DepthEncoding {
    /// `round(depth / scale)`, 0 = no geometry.
    Png16 { scale: f64 },
    /// 32-bit float, 0.0 = no geometry.
    Pfm,
}

impl Default for DepthEncoding {
    fn default() -> Self {
        DepthEncoding::Png16 { scale: DEFAULT_DEPTH_SCALE }
    }
}

impl DepthEncoding {
    pub fn extension(&self) -> &'static str {
        match self {
            DepthEncoding::Png16 { .. } => "png",
            DepthEncoding::Pfm => "pfm",
        }
    }

    pub fn encode(&self, d: &DepthMap) -> Result<Vec<u8>, FormatError> {
        match *self {
            DepthEncoding::Png16 { scale } => encode_depth_png16(d, scale),
            DepthEncoding::Pfm => Ok(encode_depth_pfm(d)),
        }
    }

    pub fn decode(&self, bytes: &[u8]) -> Result<DepthMap, FormatError> {
        match *self {
            DepthEncoding::Png16 { scale } => decode_depth_png16(bytes, scale),
            DepthEncoding::Pfm => decode_depth_pfm(bytes),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BundleMeta {
    pub fps: f64,
    pub frame_count: u32,
    /// Intrinsics of the stored rasters.
    pub intrinsics: Intrinsics,
    pub depth: DepthEncoding,
    #[serde(default)]
    pub near: Option<f64>,
    #[serde(default)]
    pub far: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BundleSettings {
    pub render: RenderSettings,
    pub depth: DepthEncoding,
    pub exec: Exec,
}

pub const META_FILE: &str = "meta.json";
pub const LABELS_FILE: &str = "labels.json";
pub const CAMERA_FILE: &str = "camera.txt";
pub const DEPTH_DIR: &str = "depth";
pub const IDMAP_DIR: &str = "idmap";

/// Relative path and contents of one output file.
pub type BundleFile = (PathBuf, Vec<u8>);

/// Writes `files` (relative path, bytes) as the directory `out`, replacing
/// any previous directory there only once the new one is complete.
pub fn write_dir_atomic(out: &Path, files: &[(PathBuf, Vec<u8>)]) -> Result<(), FormatError> {
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).in_file(&parent)?;
    let staging = tempfile::Builder::new().prefix(".staging-").tempdir_in(&parent).in_file(&parent)?;
    for (rel, bytes) in files {
        let p = staging.path().join(rel);
        if let Some(d) = p.parent() {
            fs::create_dir_all(d).in_file(d)?;
        }
        fs::write(&p, bytes).in_file(&p)?;
    }
    let staged = staging.keep();
    if out.exists() {
        let old = tempfile::Builder::new().prefix(".replaced-").tempdir_in(&parent).in_file(&parent)?.keep();
        fs::remove_dir(&old).in_file(&old)?;
        fs::rename(out, &old).in_file(out)?;
        fs::rename(&staged, out).in_file(out)?;
        fs::remove_dir_all(&old).in_file(&old)?;
    } else {
        fs::rename(&staged, out).in_file(out)?;
    }
    Ok(())
}

/// Files of a bundle for already-rendered frames.
pub fn bundle_files(
    meta: &BundleMeta,
    frames: &[(DepthMap, IdMap)],
    camera: &CameraSequence,
    labels: &BTreeMap<u32, String>,
    exec: Exec,
) -> Result<Vec<BundleFile>, FormatError> {
    let ext = meta.depth.extension();
    let encoded: Vec<Result<[BundleFile; 2], FormatError>> = par::map_range(exec, frames.len(), |f| {
        let (d, ids) = &frames[f];
        let dp = Path::new(DEPTH_DIR).join(frame_name(f, ext));
        let ip = Path::new(IDMAP_DIR).join(frame_name(f, "png"));
        let depth = meta.depth.encode(d).in_file(&dp)?;
        let idmap = encode_idmap_png(ids).in_file(&ip)?;
        Ok([(dp, depth), (ip, idmap)])
    });
    let mut files = Vec::with_capacity(frames.len() * 2 + 3);
    for e in encoded {
        files.extend(e?);
    }
    files.push((PathBuf::from(CAMERA_FILE), write_camera_txt(camera).into_bytes()));
    files.push((PathBuf::from(LABELS_FILE), json_bytes(labels)));
    files.push((PathBuf::from(META_FILE), json_bytes(meta)));
    Ok(files)
}

pub fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("plain data serializes");
    s.push('\n');
    s.into_bytes()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BundleSummary {
    pub frame_count: u32,
    pub width: u32,
    pub height: u32,
    pub entities: usize,
}

/// Renders every frame of `scene` and writes the bundle to `out`.
pub fn export_condition_bundle(scene: &Scene, settings: &BundleSettings, out: &Path) -> Result<BundleSummary, FormatError> {
    settings.render.check().map_err(FormatError::Invalid)?;
    let violations = scene.validate();
    if let Some(v) = violations.first() {
        return Err(FormatError::Invalid(format!("scene is invalid: {v} ({} violation(s))", violations.len())));
    }
    let k = settings.render.intrinsics_for(&scene.camera.intrinsics);
    let frames = render_sequence_with(scene, &settings.render, settings.exec);
    let meta = BundleMeta {
        fps: scene.fps,
        frame_count: scene.frame_count,
        intrinsics: k,
        depth: settings.depth,
        near: Some(settings.render.near),
        far: Some(settings.render.far),
    };
    let labels: BTreeMap<u32, String> = scene.entities.iter().map(|e| (e.id, e.label.clone())).collect();
    let files = bundle_files(&meta, &frames, &scene.export_camera_rt(), &labels, settings.exec)?;
    write_dir_atomic(out, &files)?;
    Ok(BundleSummary { frame_count: scene.frame_count, width: k.width, height: k.height, entities: labels.len() })
}

pub fn read_meta(dir: &Path) -> Result<BundleMeta, FormatError> {
    let p = dir.join(META_FILE);
    let text = read_text(&p)?;
    serde_json::from_str(&text).map_err(|e| FormatError::Invalid(e.to_string())).in_file(&p)
}

pub fn read_labels(dir: &Path) -> Result<BTreeMap<u32, String>, FormatError> {
    let p = dir.join(LABELS_FILE);
    let text = read_text(&p)?;
    serde_json::from_str(&text).map_err(|e| FormatError::Invalid(e.to_string())).in_file(&p)
}

/// Camera file in either supported format.
pub fn read_camera(dir: &Path) -> Result<CameraFile, FormatError> {
    let p = dir.join(CAMERA_FILE);
    parse_camera_any(&read_text(&p)?).in_file(&p)
}

/// Frame files of `sub` as `(frame, path)`, requiring names `00000.<ext>`
/// numbered contiguously from zero.
pub fn frame_files(dir: &Path, sub: &str, ext: &str) -> Result<Vec<PathBuf>, FormatError> {
    let d = dir.join(sub);
    let mut names: Vec<String> = fs::read_dir(&d)
        .in_file(&d)?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| !n.starts_with('.'))
        .collect();
    names.sort();
    let mut out = Vec::with_capacity(names.len());
    for (i, n) in names.iter().enumerate() {
        if *n != frame_name(i, ext) {
            return Err(FormatError::Invalid(format!("expected {} at position {i}, found {n}", frame_name(i, ext)))).in_file(&d);
        }
        out.push(d.join(n));
    }
    Ok(out)
}

pub fn read_depth_frames(dir: &Path, meta: &BundleMeta, exec: Exec) -> Result<Vec<DepthMap>, FormatError> {
    let paths = frame_files(dir, DEPTH_DIR, meta.depth.extension())?;
    par::map_slice(exec, &paths, |p| meta.depth.decode(&read_file(p)?).in_file(p)).into_iter().collect()
}

pub fn read_id_frames(dir: &Path, sub: &str, exec: Exec) -> Result<Vec<IdMap>, FormatError> {
    let paths = frame_files(dir, sub, "png")?;
    par::map_slice(exec, &paths, |p| decode_idmap_png(&read_file(p)?).in_file(p)).into_iter().collect()
}

/// Every inconsistency found in a bundle; empty when it is self-consistent.
pub fn validate_bundle(dir: &Path) -> Vec<String> {
    let mut problems = Vec::new();
    let meta = match read_meta(dir) {
        Ok(m) => m,
        Err(e) => return vec![e.to_string()],
    };
    let f = meta.frame_count as usize;
    if let Err(e) = meta.intrinsics.check() {
        problems.push(format!("{META_FILE}: intrinsics: {e}"));
    }
    let labels = read_labels(dir).map_err(|e| problems.push(e.to_string())).ok();
    match read_camera(dir) {
        Ok(CameraFile::Native(seq)) if seq.len() != f => {
            problems.push(format!("{CAMERA_FILE} has {} lines but {META_FILE} says {f} frames", seq.len()))
        }
        Ok(CameraFile::Native(_)) => {}
        Ok(CameraFile::Re10k(_)) => problems.push(format!("{CAMERA_FILE} is in RealEstate10K layout; bundles use 12 fields")),
        Err(e) => problems.push(e.to_string()),
    }
    let (w, h) = (meta.intrinsics.width, meta.intrinsics.height);
    match read_depth_frames(dir, &meta, Exec::default()) {
        Ok(ds) => {
            if ds.len() != f {
                problems.push(format!("{DEPTH_DIR}/ has {} frames but {META_FILE} says {f}", ds.len()));
            }
            for (i, d) in ds.iter().enumerate() {
                if (d.width, d.height) != (w, h) {
                    problems.push(format!("{DEPTH_DIR}/{}: {}x{} raster, expected {w}x{h}", frame_name(i, meta.depth.extension()), d.width, d.height));
                }
                if d.data.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    problems.push(format!("{DEPTH_DIR}/{}: negative or non-finite depth", frame_name(i, meta.depth.extension())));
                }
            }
        }
        Err(e) => problems.push(e.to_string()),
    }
    match read_id_frames(dir, IDMAP_DIR, Exec::default()) {
        Ok(ids) => {
            if ids.len() != f {
                problems.push(format!("{IDMAP_DIR}/ has {} frames but {META_FILE} says {f}", ids.len()));
            }
            let mut seen = BTreeSet::new();
            for (i, m) in ids.iter().enumerate() {
                if (m.width, m.height) != (w, h) {
                    problems.push(format!("{IDMAP_DIR}/{}: {}x{} raster, expected {w}x{h}", frame_name(i, "png"), m.width, m.height));
                }
                seen.extend(m.ids());
            }
            if let Some(labels) = &labels {
                for id in seen.iter().filter(|id| !labels.contains_key(id)) {
                    problems.push(format!("{IDMAP_DIR}/ uses id {id} which {LABELS_FILE} does not name"));
                }
            }
        }
        Err(e) => problems.push(e.to_string()),
    }
    problems
}
