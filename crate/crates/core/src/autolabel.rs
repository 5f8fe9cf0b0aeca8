//! Reconstruct per-entity 3D box tracks from externally estimated masks,
//! metric depth, camera poses and 3D point tracks.
//!
//! Per entity: pick the frame where its mask is largest, lift the masked
//! depth to a world-space cloud, fit a minimum-volume box there, then move
//! that box to every other frame by the mean displacement of its tracked
//! points. Size and orientation never change after the fit.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{unproject, Box3, Intrinsics, Pose, Vec3};
use crate::metrics::{iou, Box2};
use crate::obb::{fit_min_volume_obb_with, ObbFitReport, ObbOptions, PointCloud};
use crate::par::{self, Exec};
use crate::raster::{DepthMap, Mask};
use crate::scene::{CameraTrack, Entity, Scene};

/// Scale that makes the median absolute deviation a consistent estimator of
/// the standard deviation under normal noise.
const MAD_TO_SIGMA: f64 = 1.4826;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabelError {
    #[error("entity {0} is never visible")]
    EntityNeverVisible(u32),
    #[error("entity {0} has no masked pixel with valid depth")]
    EmptyCloud(u32),
    #[error("mask is {mask_w}x{mask_h} but depth is {depth_w}x{depth_h}")]
    SizeMismatch { mask_w: u32, mask_h: u32, depth_w: u32, depth_h: u32 },
    #[error("{observations} observations but {poses} camera poses")]
    FrameCountMismatch { observations: usize, poses: usize },
    #[error("observation {index} is for frame {frame}; frames must be 0..F in order")]
    FrameOrder { index: usize, frame: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection2D {
    pub label: String,
    #[serde(rename = "box")]
    pub bbox: Box2,
    #[serde(default)]
    pub score: Option<f64>,
    /// Entity the detection was associated with, when known.
    #[serde(default)]
    pub entity_id: Option<u32>,
}

/// Greedy IoU suppression in descending score order.
///
/// Missing scores count as 1.0, equal scores keep input order, and
/// detections scoring below `score_floor` are dropped first. Returns the
/// kept detections in the order they were accepted.
pub fn filter_overlapping_boxes(dets: &[Detection2D], iou_threshold: f64, score_floor: f64) -> Vec<Detection2D> {
    let score = |d: &Detection2D| d.score.unwrap_or(1.0);
    let mut order: Vec<usize> = (0..dets.len()).filter(|&i| score(&dets[i]) >= score_floor).collect();
    // stable sort keeps input order among equal scores
    order.sort_by(|&a, &b| score(&dets[b]).total_cmp(&score(&dets[a])));
    let mut kept: Vec<Detection2D> = Vec::new();
    for i in order {
        let d = &dets[i];
        if kept.iter().all(|k| iou(&k.bbox, &d.bbox) < iou_threshold) {
            kept.push(d.clone());
        }
    }
    kept
}

/// Index of the largest mask; ties go to the lowest index.
pub fn select_optimal_frame<'a>(masks: impl IntoIterator<Item = &'a Mask>) -> Option<usize> {
    let mut best: Option<(usize, usize)> = None;
    for (i, m) in masks.into_iter().enumerate() {
        let a = m.area();
        if a > 0 && best.is_none_or(|(_, b)| a > b) {
            best = Some((i, a));
        }
    }
    best.map(|(i, _)| i)
}

/// One world-space point per masked pixel with valid depth, in row-major
/// pixel order.
pub fn entity_point_cloud(mask: &Mask, depth: &DepthMap, pose: &Pose, k: &Intrinsics) -> Result<Vec<Vec3>, LabelError> {
    check_sizes(mask, depth)?;
    let mut out = Vec::new();
    for (x, y) in mask.pixels() {
        let d = depth.get(x, y);
        if !DepthMap::is_valid(d) {
            continue;
        }
        if let Ok(p) = unproject(x as f64 + 0.5, y as f64 + 0.5, d as f64, pose, k) {
            out.push(p);
        }
    }
    Ok(out)
}

fn check_sizes(mask: &Mask, depth: &DepthMap) -> Result<(), LabelError> {
    if (mask.width, mask.height) != (depth.width, depth.height) {
        return Err(LabelError::SizeMismatch {
            mask_w: mask.width,
            mask_h: mask.height,
            depth_w: depth.width,
            depth_h: depth.height,
        });
    }
    Ok(())
}

/// Clears masked pixels whose depth lies more than `k` scaled MADs from the
/// masked median and is cut off from the median's depth cluster by an empty
/// interval wider than one scaled MAD. The gap condition spares the long but
/// continuous depth tails of surfaces seen at grazing angles; mask bleed onto
/// background or occluders is detached and still removed. Invalid-depth
/// pixels are left for the cloud builder to skip. A zero MAD gives no scale
/// estimate, so the mask is returned unchanged.
pub fn reject_depth_outliers(mask: &Mask, depth: &DepthMap, k: f64) -> Result<(Mask, usize), LabelError> {
    check_sizes(mask, depth)?;
    let mut vals: Vec<f64> = mask
        .data
        .iter()
        .zip(&depth.data)
        .filter(|(&m, &d)| m && DepthMap::is_valid(d))
        .map(|(_, &d)| d as f64)
        .collect();
    if vals.is_empty() {
        return Ok((mask.clone(), 0));
    }
    let med = median(&mut vals);
    let mut dev: Vec<f64> = vals.iter().map(|v| (v - med).abs()).collect();
    let mad = median(&mut dev) * MAD_TO_SIGMA;
    if mad == 0.0 {
        return Ok((mask.clone(), 0));
    }
    // vals is sorted; walk outwards from the median to the first wide gap
    let mid = vals.partition_point(|&v| v < med);
    let hi = (mid.max(1)..vals.len()).find(|&i| vals[i] - vals[i - 1] > mad).map_or(f64::INFINITY, |i| vals[i - 1]);
    let lo = (1..mid.min(vals.len())).rev().find(|&i| vals[i] - vals[i - 1] > mad).map_or(f64::NEG_INFINITY, |i| vals[i]);
    let limit = k * mad;
    let mut out = mask.clone();
    let mut rejected = 0;
    for (m, &d) in out.data.iter_mut().zip(&depth.data) {
        let d = d as f64;
        if *m && DepthMap::is_valid(d as f32) && (d - med).abs() > limit && (d > hi || d < lo) {
            *m = false;
            rejected += 1;
        }
    }
    Ok((out, rejected))
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameOfReference {
    #[default]
    World,
    Camera,
}

/// One tracked point: frame index to position.
pub type Track = BTreeMap<u32, Vec3>;

/// 3D point tracks grouped by entity and track id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrackSet {
    pub frame_of_reference: FrameOfReference,
    /// Declared anchor frame per entity; every track of that entity must be
    /// observed there.
    pub anchors: BTreeMap<u32, u32>,
    pub tracks: BTreeMap<u32, BTreeMap<u32, Track>>,
}

impl TrackSet {
    /// Tracks of `entity` in world coordinates. Camera-frame points are
    /// mapped through the inverse pose of their frame; observations at
    /// frames without a pose are dropped.
    pub fn world_tracks(&self, entity: u32, poses: &[Pose]) -> BTreeMap<u32, Track> {
        let Some(tracks) = self.tracks.get(&entity) else {
            return BTreeMap::new();
        };
        match self.frame_of_reference {
            FrameOfReference::World => tracks.clone(),
            FrameOfReference::Camera => {
                let inv: Vec<Pose> = poses.iter().map(Pose::inverse).collect();
                tracks
                    .iter()
                    .map(|(&id, t)| {
                        let w = t
                            .iter()
                            .filter_map(|(&f, &p)| inv.get(f as usize).map(|c| (f, c.apply(p))))
                            .collect();
                        (id, w)
                    })
                    .collect()
            }
        }
    }

    /// Entities whose tracks miss their declared anchor frame.
    pub fn anchor_violations(&self) -> Vec<(u32, u32, u32)> {
        let mut out = Vec::new();
        for (&entity, &anchor) in &self.anchors {
            for (&track, t) in self.tracks.get(&entity).into_iter().flatten() {
                if !t.contains_key(&anchor) {
                    out.push((entity, track, anchor));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Propagation {
    pub boxes: BTreeMap<u32, Box3>,
    /// Frames with no point observed at both the anchor and that frame.
    pub missing: Vec<u32>,
}

/// Moves `anchor_box` to each frame in `0..frame_count` by the mean
/// displacement, relative to `anchor_frame`, of the points observed at both.
/// Half-extents and rotation are copied unchanged.
pub fn propagate_boxes(anchor_box: &Box3, anchor_frame: u32, tracks: &BTreeMap<u32, Track>, frame_count: u32) -> Propagation {
    let mut boxes = BTreeMap::new();
    let mut missing = Vec::new();
    for frame in 0..frame_count {
        if frame == anchor_frame {
            boxes.insert(frame, *anchor_box);
            continue;
        }
        let mut sum = Vec3::ZERO;
        let mut n = 0usize;
        for t in tracks.values() {
            if let (Some(&a), Some(&p)) = (t.get(&anchor_frame), t.get(&frame)) {
                sum += p - a;
                n += 1;
            }
        }
        if n == 0 {
            missing.push(frame);
        } else {
            boxes.insert(frame, anchor_box.translated(sum / n as f64));
        }
    }
    Propagation { boxes, missing }
}

/// Externally estimated masks and depth for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameObservation {
    pub frame: u32,
    pub masks: BTreeMap<u32, Mask>,
    pub depth: DepthMap,
}

/// Everything the labeler consumes for one clip.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelInputs {
    pub observations: Vec<FrameObservation>,
    pub tracks: TrackSet,
    pub poses: Vec<Pose>,
    pub intrinsics: Intrinsics,
    pub labels: BTreeMap<u32, String>,
    pub fps: f64,
    /// Optional detections used to suppress duplicate entities.
    pub detections: Vec<Detection2D>,
}

#[derive(Debug, Clone, Copy)]
pub struct LabelOptions {
    /// Outlier cut in scaled MADs; `None` disables rejection.
    pub mad_k: Option<f64>,
    pub iou_threshold: f64,
    pub score_floor: f64,
    pub obb: ObbOptions,
    pub exec: Exec,
}

impl Default for LabelOptions {
    fn default() -> Self {
        LabelOptions {
            mad_k: Some(3.0),
            iou_threshold: 0.5,
            score_floor: 0.0,
            obb: ObbOptions { flush_tolerance: Some(0.01), ..ObbOptions::default() },
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntityReport {
    pub id: u32,
    pub anchor_frame: u32,
    pub cloud_points: usize,
    pub rejected_outliers: usize,
    pub fit: ObbFitReport,
    pub missing_frames: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DroppedEntity {
    pub id: u32,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct LabelReport {
    pub entities: Vec<EntityReport>,
    pub dropped: Vec<DroppedEntity>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelOutput {
    pub scene: Scene,
    pub report: LabelReport,
}

/// Runs the full per-entity pipeline and assembles a scene with one box
/// keyframe per recovered frame and one camera keyframe per frame.
///
/// Entity failures are reported and the entity dropped; only clip-level
/// inconsistencies fail the call.
pub fn label_clip(inputs: &LabelInputs, opts: &LabelOptions) -> Result<LabelOutput, LabelError> {
    let frame_count = inputs.observations.len();
    if frame_count != inputs.poses.len() {
        return Err(LabelError::FrameCountMismatch { observations: frame_count, poses: inputs.poses.len() });
    }
    for (i, o) in inputs.observations.iter().enumerate() {
        if o.frame as usize != i {
            return Err(LabelError::FrameOrder { index: i, frame: o.frame });
        }
        for m in o.masks.values() {
            check_sizes(m, &o.depth)?;
        }
    }

    let mut ids: BTreeSet<u32> = inputs.labels.keys().copied().collect();
    for o in &inputs.observations {
        ids.extend(o.masks.keys().copied());
    }
    ids.remove(&0);

    let mut dropped = Vec::new();
    let suppressed = suppressed_by_detections(inputs, opts);
    ids.retain(|id| {
        if suppressed.contains(id) {
            dropped.push(DroppedEntity { id: *id, reason: "suppressed as an overlapping duplicate detection".into() });
            false
        } else {
            true
        }
    });

    let ids: Vec<u32> = ids.into_iter().collect();
    let results = par::map_slice(opts.exec, &ids, |&id| label_entity(inputs, opts, id, frame_count as u32));

    let mut camera = CameraTrack { keyframes: BTreeMap::new(), intrinsics: inputs.intrinsics };
    for (f, p) in inputs.poses.iter().enumerate() {
        camera.keyframes.insert(f as u32, *p);
    }
    let mut scene = Scene::new(frame_count as u32, inputs.fps, camera);
    let mut report = LabelReport { entities: Vec::new(), dropped };
    for (id, r) in ids.iter().zip(results) {
        match r {
            Ok((track, er)) => {
                let label = inputs.labels.get(id).cloned().unwrap_or_else(|| format!("entity_{id}"));
                scene.entities.push(Entity { id: *id, label, track });
                report.entities.push(er);
            }
            Err(e) => report.dropped.push(DroppedEntity { id: *id, reason: e.to_string() }),
        }
    }
    report.dropped.sort_by_key(|d| d.id);
    Ok(LabelOutput { scene, report })
}

/// Entity ids whose every detection lost IoU suppression to another entity.
fn suppressed_by_detections(inputs: &LabelInputs, opts: &LabelOptions) -> BTreeSet<u32> {
    if inputs.detections.is_empty() {
        return BTreeSet::new();
    }
    let kept = filter_overlapping_boxes(&inputs.detections, opts.iou_threshold, opts.score_floor);
    let kept_ids: BTreeSet<u32> = kept.iter().filter_map(|d| d.entity_id).collect();
    inputs.detections.iter().filter_map(|d| d.entity_id).filter(|id| !kept_ids.contains(id)).collect()
}

fn label_entity(
    inputs: &LabelInputs,
    opts: &LabelOptions,
    id: u32,
    frame_count: u32,
) -> Result<(BTreeMap<u32, Box3>, EntityReport), LabelError> {
    let empty = Mask::new(0, 0);
    let masks: Vec<&Mask> = inputs.observations.iter().map(|o| o.masks.get(&id).unwrap_or(&empty)).collect();
    let anchor = select_optimal_frame(masks.iter().copied()).ok_or(LabelError::EntityNeverVisible(id))?;
    let obs = &inputs.observations[anchor];

    let (mask, rejected) = match opts.mad_k {
        Some(k) => reject_depth_outliers(masks[anchor], &obs.depth, k)?,
        None => (masks[anchor].clone(), 0),
    };
    let cloud = entity_point_cloud(&mask, &obs.depth, &inputs.poses[anchor], &inputs.intrinsics)?;
    let cloud = PointCloud::new(cloud).map_err(|_| LabelError::EmptyCloud(id))?;
    let cloud_points = cloud.len();
    let (anchor_box, fit) = fit_min_volume_obb_with(&cloud, &opts.obb);

    let tracks = inputs.tracks.world_tracks(id, &inputs.poses);
    let prop = propagate_boxes(&anchor_box, anchor as u32, &tracks, frame_count);
    log::debug!("entity {id}: anchor frame {anchor}, {cloud_points} points, {} missing frames", prop.missing.len());
    let report = EntityReport {
        id,
        anchor_frame: anchor as u32,
        cloud_points,
        rejected_outliers: rejected,
        fit,
        missing_frames: prop.missing,
    };
    Ok((prop.boxes, report))
}
