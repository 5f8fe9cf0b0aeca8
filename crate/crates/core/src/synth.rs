//! Seeded synthetic clips with ground truth, for exercising the labeler.
//!
//! World convention: `-y` is up and boxes rest on the plane `y = 0`. The
//! camera orbits the origin from above, so every box shows its top face and
//! at least one side. Boxes translate without rotating and never overlap in
//! the image, and tracked points are sampled inside each box and moved
//! rigidly with it.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autolabel::{FrameObservation, FrameOfReference, LabelInputs, Track, TrackSet};
use crate::geometry::{project, Box3, Intrinsics, Pose, Rot3, Vec3};
use crate::metrics::Box2;
use crate::par::Exec;
use crate::render::{render_sequence_with, RenderSettings};
use crate::scene::{CameraTrack, Entity, Scene};

const LABELS: [&str; 6] = ["crate", "cabinet", "table", "sofa", "box", "car"];

#[derive(Debug, Clone, Copy)]
pub struct SynthOptions {
    pub frame_count: u32,
    pub min_entities: usize,
    pub max_entities: usize,
    pub width: u32,
    pub height: u32,
    pub focal: f64,
    pub moving_camera: bool,
    pub points_per_entity: usize,
    /// Probability that a track misses a frame other than its anchor.
    pub dropout: f64,
    pub fps: f64,
    pub exec: Exec,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            frame_count: 16,
            min_entities: 1,
            max_entities: 3,
            width: 640,
            height: 480,
            focal: 560.0,
            moving_camera: true,
            points_per_entity: 48,
            dropout: 0.1,
            fps: 8.0,
            exec: Exec::default(),
        }
    }
}

/// Ground-truth scene plus the labeler inputs rendered from it.
#[derive(Debug, Clone)]
pub struct SynthClip {
    pub truth: Scene,
    pub inputs: LabelInputs,
}

/// Deterministic for a given seed and options.
pub fn synth_clip(seed: u64, opts: &SynthOptions) -> SynthClip {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = Intrinsics::new(
        opts.focal,
        opts.focal,
        opts.width as f64 / 2.0,
        opts.height as f64 / 2.0,
        opts.width,
        opts.height,
    );
    let truth = loop {
        let candidate = random_scene(&mut rng, opts, k);
        if fully_visible_and_separate(&candidate) {
            break candidate;
        }
    };

    let settings = RenderSettings::default();
    let frames = render_sequence_with(&truth, &settings, opts.exec);
    let poses: Vec<Pose> = (0..truth.frame_count).map(|f| truth.camera.pose_at(f).expect("camera keyed")).collect();

    let observations: Vec<FrameObservation> = frames
        .into_iter()
        .enumerate()
        .map(|(f, (depth, ids))| {
            let masks = truth.entities.iter().map(|e| (e.id, ids.mask_for(e.id))).collect();
            FrameObservation { frame: f as u32, masks, depth }
        })
        .collect();

    let frame_of_reference = if rng.random_bool(0.5) { FrameOfReference::World } else { FrameOfReference::Camera };
    let mut tracks = TrackSet { frame_of_reference, ..Default::default() };
    for e in &truth.entities {
        let areas: Vec<usize> = observations.iter().map(|o| o.masks[&e.id].area()).collect();
        let anchor = areas.iter().enumerate().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0))).map(|(i, _)| i as u32).unwrap_or(0);
        tracks.anchors.insert(e.id, anchor);
        let mut per: BTreeMap<u32, Track> = BTreeMap::new();
        for t in 0..opts.points_per_entity {
            let b0 = e.box_at(0).expect("keyed");
            let local = Vec3::new(
                rng.random_range(-0.9..0.9) * b0.half_extents.x,
                rng.random_range(-0.9..0.9) * b0.half_extents.y,
                rng.random_range(-0.9..0.9) * b0.half_extents.z,
            );
            let mut track = Track::new();
            for f in 0..truth.frame_count {
                if f != anchor && rng.random_bool(opts.dropout) {
                    continue;
                }
                let b = e.box_at(f).expect("keyed");
                let world = b.center + b.rotation.rotate(local);
                let p = match frame_of_reference {
                    FrameOfReference::World => world,
                    FrameOfReference::Camera => poses[f as usize].apply(world),
                };
                track.insert(f, p);
            }
            per.insert(t as u32, track);
        }
        tracks.tracks.insert(e.id, per);
    }

    let labels = truth.entities.iter().map(|e| (e.id, e.label.clone())).collect();
    let inputs = LabelInputs {
        observations,
        tracks,
        poses,
        intrinsics: k,
        labels,
        fps: truth.fps,
        detections: Vec::new(),
    };
    SynthClip { truth, inputs }
}

fn random_scene(rng: &mut ChaCha8Rng, opts: &SynthOptions, k: Intrinsics) -> Scene {
    let last = opts.frame_count.saturating_sub(1);
    let n = rng.random_range(opts.min_entities..=opts.max_entities.max(opts.min_entities));

    let radius = rng.random_range(6.0..8.0);
    let elevation = rng.random_range(25f64..40.0).to_radians();
    let azimuth = rng.random_range(0.0..2.0 * PI);
    let sweep = if opts.moving_camera { rng.random_range(10f64..25.0).to_radians() * sign(rng) } else { 0.0 };
    let target = Vec3::new(0.0, -0.3, 0.0);
    let eye = |az: f64| Vec3::new(radius * elevation.cos() * az.sin(), -radius * elevation.sin(), -radius * elevation.cos() * az.cos());
    let mut camera = CameraTrack::fixed(Pose::look_at(eye(azimuth), target, Vec3::Y), k);
    if opts.moving_camera && last > 0 {
        camera.keyframes.insert(last, Pose::look_at(eye(azimuth + sweep), target, Vec3::Y));
    }

    let mut scene = Scene::new(opts.frame_count, opts.fps, camera);
    for i in 0..n {
        let half = Vec3::new(rng.random_range(0.35..0.7), rng.random_range(0.3..0.6), rng.random_range(0.35..0.7));
        let yaw = rng.random_range(0.0..2.0 * PI);
        let start = Vec3::new(rng.random_range(-2.2..2.2), -half.y, rng.random_range(-2.2..2.2));
        let step = Vec3::new(rng.random_range(-0.06..0.06), 0.0, rng.random_range(-0.06..0.06));
        let rotation = Rot3::from_axis_angle(Vec3::Y, yaw);
        let label = LABELS[rng.random_range(0..LABELS.len())];
        let mut e = Entity::new(i as u32 + 1, label).with_key(0, Box3::new(start, half, rotation));
        if last > 0 {
            e = e.with_key(last, Box3::new(start + step * last as f64, half, rotation));
        }
        scene.entities.push(e);
    }
    scene
}

fn sign(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random_bool(0.5) {
        1.0
    } else {
        -1.0
    }
}

/// Every box projects fully inside the image with a margin, and no two
/// boxes' image rectangles touch, at every frame.
fn fully_visible_and_separate(scene: &Scene) -> bool {
    const MARGIN: f64 = 8.0;
    let k = scene.camera.intrinsics;
    for f in 0..scene.frame_count {
        let Ok(sample) = scene.resolve(f) else { return false };
        let mut rects: Vec<Box2> = Vec::new();
        for b in sample.boxes.values() {
            let mut r = Box2::new(f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
            for c in b.corners() {
                let Ok(p) = project(c, &sample.camera_pose, &k) else { return false };
                if p.depth < 1.0 {
                    return false;
                }
                r = Box2::new(r.x0.min(p.u), r.y0.min(p.v), r.x1.max(p.u), r.y1.max(p.v));
            }
            if r.x0 < MARGIN || r.y0 < MARGIN || r.x1 > k.width as f64 - MARGIN || r.y1 > k.height as f64 - MARGIN {
                return false;
            }
            let grown = Box2::new(r.x0 - 2.0, r.y0 - 2.0, r.x1 + 2.0, r.y1 + 2.0);
            if rects.iter().any(|o| grown.x0 < o.x1 && o.x0 < grown.x1 && grown.y0 < o.y1 && o.y0 < grown.y1) {
                return false;
            }
            rects.push(r);
        }
    }
    true
}
