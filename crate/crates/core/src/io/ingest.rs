//! Labeling inputs on disk.
//!
//! ```text
//! clip/
//!   meta.json          fps, frame_count, intrinsics, depth encoding
//!   depth/00000.pfm    estimated depth (or 16-bit .png)
//!   masks/00000.png    8-bit id map of entity masks (idmap/ also accepted)
//!   camera.txt         native or RealEstate10K poses
//!   tracks.csv         3D point tracks
//!   labels.json        {"1": "crate", ...}
//!   detections.json    optional [{"label", "box", "score", "entity_id"}]
//! ```
//!
//! `tracks.csv` has the header `entity_id,track_id,frame,x,y,z` and may carry
//! `# frame_of_reference: world|camera` and `# anchor: <entity>=<frame>`
//! comment lines.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::bundle::{bundle_files, json_bytes, read_depth_frames, read_id_frames, read_labels, read_meta, write_dir_atomic, BundleMeta, DepthEncoding, CAMERA_FILE, DEPTH_DIR, IDMAP_DIR, LABELS_FILE, META_FILE};
use super::camera::{parse_camera_any, CameraFile};
use super::scene_doc::SceneDocument;
use super::{fmt_real, frame_name, read_text, FormatError, InFile};
use crate::autolabel::{Detection2D, FrameObservation, FrameOfReference, LabelInputs, TrackSet};
use crate::geometry::Vec3;
use crate::par::Exec;
use crate::raster::IdMap;
use crate::scene::CameraSequence;
use crate::synth::SynthClip;

pub const TRACKS_FILE: &str = "tracks.csv";
pub const DETECTIONS_FILE: &str = "detections.json";
pub const MASKS_DIR: &str = "masks";
pub const TRUTH_FILE: &str = "truth.json";

const TRACK_HEADER: [&str; 6] = ["entity_id", "track_id", "frame", "x", "y", "z"];

pub fn write_tracks_csv(tracks: &TrackSet) -> String {
    let fr = match tracks.frame_of_reference {
        FrameOfReference::World => "world",
        FrameOfReference::Camera => "camera",
    };
    let mut out = format!("# frame_of_reference: {fr}\n");
    for (e, f) in &tracks.anchors {
        let _ = writeln!(out, "# anchor: {e}={f}");
    }
    out.push_str(&TRACK_HEADER.join(","));
    out.push('\n');
    for (e, by_track) in &tracks.tracks {
        for (t, track) in by_track {
            for (f, p) in track {
                let _ = writeln!(out, "{e},{t},{f},{},{},{}", fmt_real(p.x), fmt_real(p.y), fmt_real(p.z));
            }
        }
    }
    out
}

fn directive(line_no: usize, line: &str, ts: &mut TrackSet) -> Result<(), FormatError> {
    let body = line.trim_start_matches('#').trim();
    let Some((key, value)) = body.split_once(':') else {
        return Ok(());
    };
    let value = value.trim();
    match key.trim() {
        "frame_of_reference" => {
            ts.frame_of_reference = match value {
                "world" => FrameOfReference::World,
                "camera" => FrameOfReference::Camera,
                other => {
                    return Err(FormatError::Line { line: line_no, message: format!("unknown frame_of_reference {other:?}") })
                }
            }
        }
        "anchor" => {
            for item in value.split_whitespace() {
                let parsed = item.split_once('=').and_then(|(e, f)| Some((e.parse().ok()?, f.parse().ok()?)));
                let Some((e, f)) = parsed else {
                    return Err(FormatError::Line { line: line_no, message: format!("anchor {item:?} is not <entity>=<frame>") });
                };
                ts.anchors.insert(e, f);
            }
        }
        _ => {}
    }
    Ok(())
}

pub fn parse_tracks_csv(text: &str) -> Result<TrackSet, FormatError> {
    let mut ts = TrackSet::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim_start().starts_with('#') {
            directive(i + 1, line, &mut ts)?;
        }
    }
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| csv_error(&e))?.clone();
    if header.iter().collect::<Vec<_>>() != TRACK_HEADER {
        return Err(FormatError::Line { line: 1, message: format!("expected header {:?}", TRACK_HEADER.join(",")) });
    }
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(&e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != TRACK_HEADER.len() {
            return Err(FormatError::FieldCount { line, expected: TRACK_HEADER.len(), got: rec.len() });
        }
        let int = |i: usize| {
            rec[i].parse::<u32>().map_err(|_| FormatError::Line {
                line,
                message: format!("{} {:?} is not a non-negative integer", TRACK_HEADER[i], &rec[i]),
            })
        };
        let real = |i: usize| match rec[i].parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(FormatError::NonFiniteValue { line, field: i + 1, text: rec[i].to_string() }),
        };
        let (e, t, f) = (int(0)?, int(1)?, int(2)?);
        let p = Vec3::new(real(3)?, real(4)?, real(5)?);
        if ts.tracks.entry(e).or_default().entry(t).or_default().insert(f, p).is_some() {
            return Err(FormatError::Line { line, message: format!("duplicate row for entity {e} track {t} frame {f}") });
        }
    }
    Ok(ts)
}

fn csv_error(e: &csv::Error) -> FormatError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            FormatError::FieldCount { line, expected: *expected_len as usize, got: *len as usize }
        }
        _ => FormatError::Line { line, message: e.to_string() },
    }
}

fn id_map_from_masks(obs: &FrameObservation) -> IdMap {
    let mut ids = IdMap::new(obs.depth.width, obs.depth.height);
    for (&id, m) in &obs.masks {
        for (x, y) in m.pixels() {
            ids.data[(y * ids.width + x) as usize] = id;
        }
    }
    ids
}

/// Reads a labeling input directory, cross-checking every file.
pub fn ingest_label_inputs(dir: &Path, exec: Exec) -> Result<LabelInputs, FormatError> {
    let meta = read_meta(dir)?;
    let meta_path = dir.join(META_FILE);
    meta.intrinsics.check().map_err(FormatError::Invalid).in_file(&meta_path)?;
    let f = meta.frame_count as usize;
    let depth_name = |i: usize| format!("{DEPTH_DIR}/{}", frame_name(i, meta.depth.extension()));

    let depth = read_depth_frames(dir, &meta, exec)?;
    let mask_dir = if dir.join(MASKS_DIR).is_dir() { MASKS_DIR } else { IDMAP_DIR };
    let ids = read_id_frames(dir, mask_dir, exec)?;
    if depth.len() != f {
        return Err(FormatError::consistency(META_FILE, format!("{DEPTH_DIR}/"), format!("{f} frames declared, {} depth files", depth.len())));
    }
    if ids.len() != f {
        return Err(FormatError::consistency(META_FILE, format!("{mask_dir}/"), format!("{f} frames declared, {} mask files", ids.len())));
    }
    let (w, h) = (meta.intrinsics.width, meta.intrinsics.height);
    for i in 0..f {
        let mask_name = format!("{mask_dir}/{}", frame_name(i, "png"));
        if (depth[i].width, depth[i].height) != (w, h) {
            return Err(FormatError::consistency(
                depth_name(i),
                META_FILE,
                format!("raster is {}x{}, intrinsics are {w}x{h}", depth[i].width, depth[i].height),
            ));
        }
        if (ids[i].width, ids[i].height) != (w, h) {
            return Err(FormatError::consistency(
                mask_name,
                depth_name(i),
                format!("mask is {}x{}, depth is {w}x{h}", ids[i].width, ids[i].height),
            ));
        }
    }

    let cam_path = dir.join(CAMERA_FILE);
    let seq: CameraSequence = match parse_camera_any(&read_text(&cam_path)?).in_file(&cam_path)? {
        CameraFile::Native(s) => s,
        CameraFile::Re10k(clip) => {
            log::debug!("{CAMERA_FILE}: RealEstate10K poses; intrinsics taken from {META_FILE}");
            clip.sequence
        }
    };
    if seq.len() != f {
        return Err(FormatError::consistency(META_FILE, CAMERA_FILE, format!("{f} frames declared, {} camera lines", seq.len())));
    }

    let tracks_path = dir.join(TRACKS_FILE);
    let tracks = parse_tracks_csv(&read_text(&tracks_path)?).in_file(&tracks_path)?;
    if let Some((e, t, a)) = tracks.anchor_violations().first() {
        return Err(FormatError::consistency(
            TRACKS_FILE,
            format!("anchor of entity {e}"),
            format!("entity {e} track {t} has no row at its anchor frame {a}"),
        ));
    }
    for (e, by_track) in &tracks.tracks {
        for (t, track) in by_track {
            if let Some((&fr, _)) = track.range(meta.frame_count..).next() {
                return Err(FormatError::consistency(
                    TRACKS_FILE,
                    META_FILE,
                    format!("entity {e} track {t} has a row at frame {fr}, clip has {f} frames"),
                ));
            }
        }
    }

    let labels = read_labels(dir)?;
    let observations: Vec<FrameObservation> = depth
        .into_iter()
        .zip(&ids)
        .enumerate()
        .map(|(i, (d, m))| FrameObservation {
            frame: i as u32,
            masks: m.ids().into_iter().filter(|&id| id != 0).map(|id| (id, m.mask_for(id))).collect(),
            depth: d,
        })
        .collect();
    for o in &observations {
        if let Some(id) = o.masks.keys().find(|id| !labels.contains_key(id)) {
            return Err(FormatError::consistency(
                format!("{mask_dir}/{}", frame_name(o.frame as usize, "png")),
                LABELS_FILE,
                format!("entity {id} has no label"),
            ));
        }
    }

    let det_path = dir.join(DETECTIONS_FILE);
    let detections: Vec<Detection2D> = if det_path.exists() {
        serde_json::from_str(&read_text(&det_path)?).map_err(|e| FormatError::Invalid(e.to_string())).in_file(&det_path)?
    } else {
        Vec::new()
    };

    Ok(LabelInputs {
        observations,
        tracks,
        poses: seq.poses(),
        intrinsics: meta.intrinsics,
        labels,
        fps: meta.fps,
        detections,
    })
}

/// Writes `inputs` as an ingest directory. Depth is stored as PFM so the
/// round trip is lossless.
pub fn write_label_inputs(inputs: &LabelInputs, dir: &Path, exec: Exec) -> Result<(), FormatError> {
    write_dir_atomic(dir, &label_input_files(inputs, exec)?)
}

fn label_input_files(inputs: &LabelInputs, exec: Exec) -> Result<Vec<(PathBuf, Vec<u8>)>, FormatError> {
    let meta = BundleMeta {
        fps: inputs.fps,
        frame_count: inputs.observations.len() as u32,
        intrinsics: inputs.intrinsics,
        depth: DepthEncoding::Pfm,
        near: None,
        far: None,
    };
    let frames: Vec<_> = inputs.observations.iter().map(|o| (o.depth.clone(), id_map_from_masks(o))).collect();
    let camera = CameraSequence { rows: inputs.poses.iter().map(|p| p.to_rt_row()).collect() };
    let mut files: Vec<(PathBuf, Vec<u8>)> = bundle_files(&meta, &frames, &camera, &inputs.labels, exec)?
        .into_iter()
        .map(|(p, b)| match p.strip_prefix(IDMAP_DIR) {
            Ok(rest) => (Path::new(MASKS_DIR).join(rest), b),
            Err(_) => (p, b),
        })
        .collect();
    files.push((PathBuf::from(TRACKS_FILE), write_tracks_csv(&inputs.tracks).into_bytes()));
    if !inputs.detections.is_empty() {
        files.push((PathBuf::from(DETECTIONS_FILE), json_bytes(&inputs.detections)));
    }
    Ok(files)
}

/// A synthetic clip as an ingest directory plus its ground truth scene.
pub fn write_synth_clip(clip: &SynthClip, dir: &Path, exec: Exec) -> Result<(), FormatError> {
    let mut files = label_input_files(&clip.inputs, exec)?;
    files.push((PathBuf::from(TRUTH_FILE), SceneDocument::from_scene(&clip.truth).to_json().into_bytes()));
    write_dir_atomic(dir, &files)
}
