//! Evaluation pairs as JSON lines, one object per frame:
//!
//! ```json
//! {"frame": 0, "pred_box": [10, 20, 50, 80], "gt_box": [12, 20, 52, 80], "pred_depth": 3.1, "gt_depth": 3.0}
//! ```
//!
//! Every field but `frame` may be absent or null. An optional `entity_id`
//! lets ground truth be derived from a scene document.

use super::FormatError;
use crate::geometry::{project, Box3, Intrinsics, Pose};
use crate::metrics::{box_reference_depth, Box2, DepthReference, EvalFrame, TrackEval};
use crate::scene::Scene;

pub fn parse_eval_jsonl(text: &str) -> Result<TrackEval, FormatError> {
    let mut frames = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let f: EvalFrame =
            serde_json::from_str(line).map_err(|e| FormatError::Line { line: i + 1, message: e.to_string() })?;
        for (name, v) in [("pred_depth", f.pred_depth), ("gt_depth", f.gt_depth)] {
            if v.is_some_and(|d| !d.is_finite()) {
                return Err(FormatError::Line { line: i + 1, message: format!("{name} is not finite") });
            }
        }
        frames.push(f);
    }
    Ok(TrackEval { frames })
}

pub fn write_eval_jsonl(pairs: &TrackEval) -> String {
    let mut out = String::new();
    for f in &pairs.frames {
        out.push_str(&serde_json::to_string(f).expect("plain data serializes"));
        out.push('\n');
    }
    out
}

/// Image-space bounds of a box's projected corners, clipped to the raster.
/// `None` when a corner is behind the camera or nothing is on screen.
pub fn projected_box(b: &Box3, pose: &Pose, k: &Intrinsics) -> Option<Box2> {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for c in b.corners() {
        let p = project(c, pose, k).ok()?;
        x0 = x0.min(p.u);
        y0 = y0.min(p.v);
        x1 = x1.max(p.u);
        y1 = y1.max(p.v);
    }
    let clipped = Box2::new(x0.max(0.0), y0.max(0.0), x1.min(k.width as f64), y1.min(k.height as f64));
    clipped.is_valid().then_some(clipped)
}

/// Fills `gt_box` and `gt_depth` of every frame naming an `entity_id` from
/// `scene`. Returns how many frames could not be filled.
pub fn fill_ground_truth(pairs: &mut TrackEval, scene: &Scene, mode: DepthReference) -> usize {
    let k = scene.camera.intrinsics;
    let mut unfilled = 0;
    for f in &mut pairs.frames {
        let found = f.entity_id.and_then(|id| {
            let b = scene.entity(id)?.box_at(f.frame)?;
            let pose = scene.camera.pose_at(f.frame)?;
            Some((b, pose))
        });
        match found {
            Some((b, pose)) => {
                f.gt_box = projected_box(&b, &pose, &k);
                f.gt_depth = Some(box_reference_depth(&b, &pose, mode));
            }
            None => unfilled += 1,
        }
    }
    unfilled
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use crate::metrics::evaluate;
    use crate::scene::{CameraTrack, Entity};

    #[test]
    fn round_trip_and_identical_pairs() {
        let text = "{\"frame\": 0, \"pred_box\": [0, 0, 2, 2], \"gt_box\": [0, 0, 2, 2], \"pred_depth\": 2.0, \"gt_depth\": 2.0}\n\
                    \n\
                    {\"frame\": 1, \"pred_box\": null, \"gt_box\": [1, 1, 3, 3]}\n";
        let pairs = parse_eval_jsonl(text).unwrap();
        assert_eq!(pairs.frames.len(), 2);
        assert_eq!(parse_eval_jsonl(&write_eval_jsonl(&pairs)).unwrap(), pairs);
        let r = evaluate(&pairs, None);
        assert_eq!(r.miou.unwrap().value, 1.0);
        assert_eq!(r.traj_d.unwrap().value, 0.0);
        assert_eq!(r.miou.unwrap().coverage, 0.5);
    }

    #[test]
    fn errors_name_the_line() {
        let e = parse_eval_jsonl("{\"frame\": 0}\n{\"frame\": \"x\"}\n").unwrap_err();
        assert!(matches!(e, FormatError::Line { line: 2, .. }), "{e:?}");
    }

    #[test]
    fn ground_truth_from_scene() {
        let k = Intrinsics::new(100.0, 100.0, 50.0, 50.0, 100, 100);
        let scene = Scene::new(2, 8.0, CameraTrack::fixed(Pose::from_translation(Vec3::new(0.0, 0.0, 5.0)), k))
            .with_entity(Entity::new(3, "crate").with_key(0, Box3::axis_aligned(Vec3::ZERO, Vec3::splat(0.5))));
        let mut pairs = TrackEval {
            frames: vec![
                EvalFrame { frame: 1, entity_id: Some(3), ..Default::default() },
                EvalFrame { frame: 1, entity_id: Some(9), ..Default::default() },
            ],
        };
        assert_eq!(fill_ground_truth(&mut pairs, &scene, DepthReference::Center), 1);
        assert_eq!(pairs.frames[0].gt_depth, Some(5.0));
        // near face at z=4.5 spans 100 * 0.5 / 4.5 pixels each side
        let b = pairs.frames[0].gt_box.unwrap();
        assert!((b.x0 - (50.0 - 100.0 / 9.0)).abs() < 1e-9 && (b.x1 - (50.0 + 100.0 / 9.0)).abs() < 1e-9);
        fill_ground_truth(&mut pairs, &scene, DepthReference::NearestFace);
        assert_eq!(pairs.frames[0].gt_depth, Some(4.5));
    }
}
