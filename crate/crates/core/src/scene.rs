//! Authored scenes: labeled entities with keyframed box tracks and a
//! keyframed camera, resolved to concrete per-frame samples.
//!
//! Between keyframes, box centers, half-extents and camera positions are
//! interpolated linearly and rotations by shortest-arc slerp; outside the
//! keyed range the nearest keyframe holds. Camera keyframes are stored as
//! world-to-camera poses, but the interpolated quantity is the camera center,
//! so a panning camera travels along a straight line in the world.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Box3, Intrinsics, Pose};

/// Something that owns a keyframe track.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Target {
    Entity(u32),
    #[serde(with = "camera_tag")]
    Camera,
}

mod camera_tag {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("camera")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let s = String::deserialize(d)?;
        if s == "camera" {
            Ok(())
        } else {
            Err(D::Error::custom(format!("expected \"camera\" or an entity id, got {s:?}")))
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Entity(id) => write!(f, "entity {id}"),
            Target::Camera => write!(f, "camera"),
        }
    }
}

/// A keyframe payload: a box for entities, a pose for the camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KeyValue {
    Box(Box3),
    Pose(Pose),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("frame {frame} is outside [0, {frame_count})")]
    FrameOutOfRange { frame: u32, frame_count: u32 },
    #[error("cannot remove the last keyframe of {0}")]
    LastKeyframeRemoval(Target),
    #[error("unknown entity {0}")]
    UnknownEntity(u32),
    #[error("{0} has no keyframe at frame {1}")]
    NoSuchKeyframe(Target, u32),
    #[error("{0} expects a {1} keyframe value")]
    WrongValueKind(Target, &'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entity {
    pub id: u32,
    pub label: String,
    pub track: BTreeMap<u32, Box3>,
}

impl Entity {
    pub fn new(id: u32, label: impl Into<String>) -> Entity {
        Entity { id, label: label.into(), track: BTreeMap::new() }
    }

    pub fn with_key(mut self, frame: u32, b: Box3) -> Entity {
        self.track.insert(frame, b);
        self
    }

    pub fn box_at(&self, frame: u32) -> Option<Box3> {
        sample_track(&self.track, frame, |a, b, t| {
            Box3::new(a.center.lerp(b.center, t), a.half_extents.lerp(b.half_extents, t), a.rotation.slerp(b.rotation, t))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraTrack {
    pub keyframes: BTreeMap<u32, Pose>,
    pub intrinsics: Intrinsics,
}

impl CameraTrack {
    pub fn fixed(pose: Pose, intrinsics: Intrinsics) -> CameraTrack {
        CameraTrack { keyframes: BTreeMap::from([(0, pose)]), intrinsics }
    }

    pub fn pose_at(&self, frame: u32) -> Option<Pose> {
        sample_track(&self.keyframes, frame, interpolate_camera)
    }
}

fn interpolate_camera(a: &Pose, b: &Pose, t: f64) -> Pose {
    let center = a.camera_center().lerp(b.camera_center(), t);
    let rotation = a.rotation.slerp(b.rotation, t);
    Pose::new(rotation, -rotation.rotate(center))
}

/// Piecewise interpolation over an ordered keyframe map, clamped at both ends.
/// Exact keyframe hits return the stored value untouched.
fn sample_track<T: Copy>(track: &BTreeMap<u32, T>, frame: u32, interp: impl Fn(&T, &T, f64) -> T) -> Option<T> {
    let before = track.range(..=frame).next_back();
    let after = track.range(frame..).next();
    match (before, after) {
        (Some((&f0, v0)), _) if f0 == frame => Some(*v0),
        (Some((&f0, v0)), Some((&f1, v1))) => {
            let t = (frame - f0) as f64 / (f1 - f0) as f64;
            Some(interp(v0, v1, t))
        }
        (Some((_, v)), None) | (None, Some((_, v))) => Some(*v),
        (None, None) => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub frame_count: u32,
    pub fps: f64,
    pub entities: Vec<Entity>,
    pub camera: CameraTrack,
}

/// Every entity's box and the camera pose at one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSample {
    pub frame: u32,
    pub boxes: BTreeMap<u32, Box3>,
    pub camera_pose: Pose,
}

/// Per-frame extrinsics flattened to `[r00 r01 r02 r10 r11 r12 r20 r21 r22 tx ty tz]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CameraSequence {
    pub rows: Vec<[f64; 12]>,
}

impl CameraSequence {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn poses(&self) -> Vec<Pose> {
        self.rows.iter().map(Pose::from_rt_row).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    ZeroFrameCount,
    InvalidFps { fps: f64 },
    InvalidIntrinsics { reason: String },
    EmptyTrack { target: Target },
    FrameOutOfRange { target: Target, frame: u32, frame_count: u32 },
    ReservedId,
    DuplicateId { id: u32 },
    EmptyLabel { id: u32 },
    InvalidBox { id: u32, frame: u32, reason: String },
    InvalidPose { frame: u32 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ZeroFrameCount => write!(f, "frame_count must be positive"),
            Violation::InvalidFps { fps } => write!(f, "fps must be positive and finite, got {fps}"),
            Violation::InvalidIntrinsics { reason } => write!(f, "camera intrinsics: {reason}"),
            Violation::EmptyTrack { target } => write!(f, "{target} has no keyframes"),
            Violation::FrameOutOfRange { target, frame, frame_count } => {
                write!(f, "{target}: keyframe at frame {frame} outside [0, {frame_count})")
            }
            Violation::ReservedId => write!(f, "entity id 0 is reserved for background"),
            Violation::DuplicateId { id } => write!(f, "duplicate entity id {id}"),
            Violation::EmptyLabel { id } => write!(f, "entity {id} has an empty label"),
            Violation::InvalidBox { id, frame, reason } => write!(f, "entity {id} frame {frame}: {reason}"),
            Violation::InvalidPose { frame } => write!(f, "camera frame {frame}: pose is not a finite rigid transform"),
        }
    }
}

/// Non-fatal authoring notes.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// Keyframed box volumes differ; labeled data assumes constant volume.
    VolumeVaries { id: u32, min_volume: f64, max_volume: f64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::VolumeVaries { id, min_volume, max_volume } => {
                write!(f, "entity {id}: box volume varies between {min_volume} and {max_volume}")
            }
        }
    }
}

impl Scene {
    pub fn new(frame_count: u32, fps: f64, camera: CameraTrack) -> Scene {
        Scene { frame_count, fps, entities: Vec::new(), camera }
    }

    pub fn with_entity(mut self, e: Entity) -> Scene {
        self.entities.push(e);
        self
    }

    pub fn entity(&self, id: u32) -> Option<&Entity> {
        self.entities.iter().find(|e| e.id == id)
    }

    fn check_frame(&self, frame: u32) -> Result<(), SceneError> {
        if frame >= self.frame_count {
            return Err(SceneError::FrameOutOfRange { frame, frame_count: self.frame_count });
        }
        Ok(())
    }

    /// Returns a copy with the keyframe inserted or overwritten.
    pub fn set_keyframe(&self, target: Target, frame: u32, value: KeyValue) -> Result<Scene, SceneError> {
        self.check_frame(frame)?;
        let mut out = self.clone();
        match (target, value) {
            (Target::Camera, KeyValue::Pose(p)) => {
                out.camera.keyframes.insert(frame, p);
            }
            (Target::Entity(id), KeyValue::Box(b)) => {
                let e = out.entities.iter_mut().find(|e| e.id == id).ok_or(SceneError::UnknownEntity(id))?;
                e.track.insert(frame, b);
            }
            (Target::Camera, KeyValue::Box(_)) => return Err(SceneError::WrongValueKind(target, "pose")),
            (Target::Entity(_), KeyValue::Pose(_)) => return Err(SceneError::WrongValueKind(target, "box")),
        }
        Ok(out)
    }

    /// Returns a copy without the keyframe. A track never becomes empty.
    pub fn remove_keyframe(&self, target: Target, frame: u32) -> Result<Scene, SceneError> {
        self.check_frame(frame)?;
        let mut out = self.clone();
        let len = match target {
            Target::Camera => out.camera.keyframes.len(),
            Target::Entity(id) => out.entity(id).ok_or(SceneError::UnknownEntity(id))?.track.len(),
        };
        let present = match target {
            Target::Camera => out.camera.keyframes.contains_key(&frame),
            Target::Entity(id) => out.entity(id).is_some_and(|e| e.track.contains_key(&frame)),
        };
        if !present {
            return Err(SceneError::NoSuchKeyframe(target, frame));
        }
        if len == 1 {
            return Err(SceneError::LastKeyframeRemoval(target));
        }
        match target {
            Target::Camera => {
                out.camera.keyframes.remove(&frame);
            }
            Target::Entity(id) => {
                if let Some(e) = out.entities.iter_mut().find(|e| e.id == id) {
                    e.track.remove(&frame);
                }
            }
        }
        Ok(out)
    }

    pub fn resolve(&self, frame: u32) -> Result<SceneSample, SceneError> {
        self.check_frame(frame)?;
        let boxes = self
            .entities
            .iter()
            .filter_map(|e| e.box_at(frame).map(|b| (e.id, b)))
            .collect();
        let camera_pose = self.camera.pose_at(frame).unwrap_or(Pose::IDENTITY);
        Ok(SceneSample { frame, boxes, camera_pose })
    }

    /// One `[R | t]` row per frame, exactly `frame_count` rows.
    pub fn export_camera_rt(&self) -> CameraSequence {
        let rows = (0..self.frame_count)
            .map(|f| self.camera.pose_at(f).unwrap_or(Pose::IDENTITY).to_rt_row())
            .collect();
        CameraSequence { rows }
    }

    /// All invariant violations; empty iff the scene is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.frame_count == 0 {
            out.push(Violation::ZeroFrameCount);
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            out.push(Violation::InvalidFps { fps: self.fps });
        }
        if let Err(reason) = self.camera.intrinsics.check() {
            out.push(Violation::InvalidIntrinsics { reason });
        }
        if self.camera.keyframes.is_empty() {
            out.push(Violation::EmptyTrack { target: Target::Camera });
        }
        for (&frame, pose) in &self.camera.keyframes {
            if frame >= self.frame_count {
                out.push(Violation::FrameOutOfRange { target: Target::Camera, frame, frame_count: self.frame_count });
            }
            if !pose.is_finite() || (pose.rotation.norm() - 1.0).abs() > 1e-9 {
                out.push(Violation::InvalidPose { frame });
            }
        }
        let mut seen = HashSet::new();
        for e in &self.entities {
            if e.id == 0 {
                out.push(Violation::ReservedId);
            } else if !seen.insert(e.id) {
                out.push(Violation::DuplicateId { id: e.id });
            }
            if e.label.trim().is_empty() {
                out.push(Violation::EmptyLabel { id: e.id });
            }
            if e.track.is_empty() {
                out.push(Violation::EmptyTrack { target: Target::Entity(e.id) });
            }
            for (&frame, b) in &e.track {
                if frame >= self.frame_count {
                    out.push(Violation::FrameOutOfRange {
                        target: Target::Entity(e.id),
                        frame,
                        frame_count: self.frame_count,
                    });
                }
                if let Err(reason) = b.check() {
                    out.push(Violation::InvalidBox { id: e.id, frame, reason });
                }
            }
        }
        out
    }

    pub fn warnings(&self) -> Vec<Warning> {
        let mut out = Vec::new();
        for e in &self.entities {
            let vols: Vec<f64> = e.track.values().map(Box3::volume).collect();
            let min = vols.iter().copied().fold(f64::INFINITY, f64::min);
            let max = vols.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if vols.len() > 1 && max - min > 1e-9 * max.abs() {
                out.push(Warning::VolumeVaries { id: e.id, min_volume: min, max_volume: max });
            }
        }
        out
    }
}
