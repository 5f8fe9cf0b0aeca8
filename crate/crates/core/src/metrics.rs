//! Controllability metrics: box mIoU, center trajectory deviation and depth
//! RMSE, computed from per-frame prediction / ground-truth pairs.
//!
//! Frames missing either side of a pair are excluded from a metric and
//! counted in its coverage instead of being scored as zero.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Box3, Pose};
use crate::raster::{DepthMap, Mask};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("no frame has both a prediction and a ground truth for {0}")]
    NoValidPairs(&'static str),
    #[error("mask selects no pixel with valid depth")]
    EmptyRegion,
    #[error("mask is {0}x{1} but depth is {2}x{3}")]
    SizeMismatch(u32, u32, u32, u32),
}

/// Axis-aligned image box `[x0, y0, x1, y1]` in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Box2 {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl From<[f64; 4]> for Box2 {
    fn from(a: [f64; 4]) -> Self {
        Box2 { x0: a[0], y0: a[1], x1: a[2], y1: a[3] }
    }
}

impl From<Box2> for [f64; 4] {
    fn from(b: Box2) -> Self {
        [b.x0, b.y0, b.x1, b.y1]
    }
}

impl Box2 {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Box2 {
        Box2 { x0, y0, x1, y1 }
    }

    pub fn is_valid(&self) -> bool {
        self.x0 < self.x1 && self.y0 < self.y1
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0).max(0.0) * (self.y1 - self.y0).max(0.0)
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }
}

pub fn iou(a: &Box2, b: &Box2) -> f64 {
    let iw = (a.x1.min(b.x1) - a.x0.max(b.x0)).max(0.0);
    let ih = (a.y1.min(b.y1) - a.y0.max(b.y0)).max(0.0);
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    inter / union
}

/// One evaluated frame; any field may be absent.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalFrame {
    pub frame: u32,
    #[serde(default)]
    pub pred_box: Option<Box2>,
    #[serde(default)]
    pub gt_box: Option<Box2>,
    #[serde(default)]
    pub pred_depth: Option<f64>,
    #[serde(default)]
    pub gt_depth: Option<f64>,
    /// Entity the pair belongs to; needed to derive ground truth from a scene.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entity_id: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrackEval {
    pub frames: Vec<EvalFrame>,
}

/// A metric value with the number of frames that contributed to it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub value: f64,
    pub valid: usize,
    pub total: usize,
    pub coverage: f64,
}

impl Scored {
    fn new(value: f64, valid: usize, total: usize) -> Scored {
        let coverage = if total == 0 { 0.0 } else { valid as f64 / total as f64 };
        Scored { value, valid, total, coverage }
    }
}

impl TrackEval {
    fn box_pairs(&self) -> impl Iterator<Item = (Box2, Box2)> + '_ {
        self.frames.iter().filter_map(|f| match (f.pred_box, f.gt_box) {
            (Some(p), Some(g)) if p.is_valid() && g.is_valid() => Some((p, g)),
            _ => None,
        })
    }

    fn depth_pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.frames.iter().filter_map(|f| match (f.pred_depth, f.gt_depth) {
            (Some(p), Some(g)) if p.is_finite() && g.is_finite() => Some((p, g)),
            _ => None,
        })
    }
}

/// Mean per-frame IoU over frames with both boxes.
pub fn miou(pairs: &TrackEval) -> Result<Scored, MetricsError> {
    let ious: Vec<f64> = pairs.box_pairs().map(|(p, g)| iou(&p, &g)).collect();
    mean_scored(&ious, pairs.frames.len(), "miou")
}

/// Mean Euclidean distance between predicted and ground-truth box centers,
/// in pixels.
pub fn traj_deviation(pairs: &TrackEval) -> Result<Scored, MetricsError> {
    let d: Vec<f64> = pairs
        .box_pairs()
        .map(|(p, g)| {
            let (pc, gc) = (p.center(), g.center());
            (pc.0 - gc.0).hypot(pc.1 - gc.1)
        })
        .collect();
    mean_scored(&d, pairs.frames.len(), "traj_deviation")
}

/// Root mean squared difference between predicted region depth and
/// ground-truth box depth, in meters.
pub fn depth_deviation(pairs: &TrackEval) -> Result<Scored, MetricsError> {
    let sq: Vec<f64> = pairs.depth_pairs().map(|(p, g)| (p - g) * (p - g)).collect();
    let m = mean_scored(&sq, pairs.frames.len(), "depth_deviation")?;
    Ok(Scored { value: m.value.sqrt(), ..m })
}

fn mean_scored(values: &[f64], total: usize, what: &'static str) -> Result<Scored, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::NoValidPairs(what));
    }
    // sorted summation makes the result independent of frame order
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
    Ok(Scored::new(mean, values.len(), total))
}

/// Mean of valid (nonzero, finite) depth under the mask.
pub fn mean_region_depth(mask: &Mask, depth: &DepthMap) -> Result<f64, MetricsError> {
    if (mask.width, mask.height) != (depth.width, depth.height) {
        return Err(MetricsError::SizeMismatch(mask.width, mask.height, depth.width, depth.height));
    }
    let (sum, n) = mask
        .data
        .iter()
        .zip(&depth.data)
        .filter(|(&m, &d)| m && DepthMap::is_valid(d))
        .fold((0.0f64, 0usize), |(s, n), (_, &d)| (s + d as f64, n + 1));
    if n == 0 {
        return Err(MetricsError::EmptyRegion);
    }
    Ok(sum / n as f64)
}

/// Which single depth summarizes a ground-truth box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DepthReference {
    /// Camera-space z of the box center.
    #[default]
    Center,
    /// Smallest camera-space z over the box corners.
    NearestFace,
}

pub fn box_reference_depth(b: &Box3, camera: &Pose, mode: DepthReference) -> f64 {
    match mode {
        DepthReference::Center => camera.apply(b.center).z,
        DepthReference::NearestFace => b
            .corners()
            .iter()
            .map(|&c| camera.apply(c).z)
            .fold(f64::INFINITY, f64::min),
    }
}

/// All three metrics; a metric with no valid pairs is reported as `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub frames: usize,
    pub miou: Option<Scored>,
    pub traj_d: Option<Scored>,
    pub depth_d: Option<Scored>,
    /// Raster size the pixel metrics refer to, when known.
    pub resolution: Option<[u32; 2]>,
}

pub fn evaluate(pairs: &TrackEval, resolution: Option<[u32; 2]>) -> EvalReport {
    EvalReport {
        frames: pairs.frames.len(),
        miou: miou(pairs).ok(),
        traj_d: traj_deviation(pairs).ok(),
        depth_d: depth_deviation(pairs).ok(),
        resolution,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;

    fn frame(i: u32, p: Option<[f64; 4]>, g: Option<[f64; 4]>) -> EvalFrame {
        EvalFrame { frame: i, pred_box: p.map(Box2::from), gt_box: g.map(Box2::from), ..Default::default() }
    }

    #[test]
    fn iou_examples() {
        let a = Box2::new(0.0, 0.0, 2.0, 2.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &Box2::new(5.0, 5.0, 6.0, 6.0)), 0.0);
        // intersection 2, union 6
        assert!((iou(&a, &Box2::new(1.0, 0.0, 3.0, 2.0)) - 1.0 / 3.0).abs() < 1e-12);
        // touching edges do not overlap
        assert_eq!(iou(&a, &Box2::new(2.0, 0.0, 3.0, 2.0)), 0.0);
    }

    #[test]
    fn miou_examples() {
        let a = [0.0, 0.0, 2.0, 2.0];
        let same = TrackEval { frames: vec![frame(0, Some(a), Some(a)), frame(1, Some(a), Some(a))] };
        assert_eq!(miou(&same).unwrap().value, 1.0);

        let half = TrackEval { frames: vec![frame(0, Some(a), Some(a)), frame(1, Some(a), Some([5.0, 5.0, 6.0, 6.0]))] };
        assert_eq!(miou(&half).unwrap().value, 0.5);

        // (1 + 1/3 + 0) / 3 = 4/9
        let three = TrackEval {
            frames: vec![
                frame(0, Some(a), Some(a)),
                frame(1, Some(a), Some([1.0, 0.0, 3.0, 2.0])),
                frame(2, Some(a), Some([7.0, 7.0, 8.0, 8.0])),
            ],
        };
        assert!((miou(&three).unwrap().value - 4.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn missing_frames_reduce_coverage() {
        let a = [0.0, 0.0, 2.0, 2.0];
        let e = TrackEval { frames: vec![frame(0, Some(a), Some(a)), frame(1, None, Some(a)), frame(2, Some(a), None)] };
        let m = miou(&e).unwrap();
        assert_eq!((m.value, m.valid, m.total), (1.0, 1, 3));
        assert!((m.coverage - 1.0 / 3.0).abs() < 1e-15);
        let none = TrackEval { frames: vec![frame(0, None, Some(a))] };
        assert_eq!(miou(&none).unwrap_err(), MetricsError::NoValidPairs("miou"));
        assert!(traj_deviation(&TrackEval::default()).is_err());
    }

    #[test]
    fn trajectory_examples() {
        let a = [0.0, 0.0, 2.0, 2.0];
        let same = TrackEval { frames: vec![frame(0, Some(a), Some(a))] };
        assert_eq!(traj_deviation(&same).unwrap().value, 0.0);
        let shifted = TrackEval {
            frames: (0..4).map(|i| frame(i, Some([3.0, 4.0, 5.0, 6.0]), Some(a))).collect(),
        };
        assert_eq!(traj_deviation(&shifted).unwrap().value, 5.0);
        let single = TrackEval { frames: vec![frame(0, Some([-1.0, -1.0, 1.0, 1.0]), Some([-1.0, 1.0, 1.0, 3.0]))] };
        assert_eq!(traj_deviation(&single).unwrap().value, 2.0);
    }

    #[test]
    fn depth_examples() {
        let d = |p: f64, g: f64| EvalFrame { pred_depth: Some(p), gt_depth: Some(g), ..Default::default() };
        let eq = TrackEval { frames: vec![d(2.0, 2.0), d(3.0, 3.0)] };
        assert_eq!(depth_deviation(&eq).unwrap().value, 0.0);
        let e = TrackEval { frames: vec![d(1.0, 2.0), d(3.0, 2.0)] };
        assert_eq!(depth_deviation(&e).unwrap().value, 1.0);
        let single = TrackEval { frames: vec![d(2.5, 2.0)] };
        assert_eq!(depth_deviation(&single).unwrap().value, 0.5);
    }

    #[test]
    fn region_depth_examples() {
        let mask = Mask { width: 2, height: 2, data: vec![true, true, true, false] };
        let uniform = DepthMap::from_data(2, 2, vec![2.0; 4]);
        assert_eq!(mean_region_depth(&mask, &uniform).unwrap(), 2.0);
        let full = Mask { width: 2, height: 2, data: vec![true; 4] };
        let halves = DepthMap::from_data(2, 2, vec![1.0, 3.0, 1.0, 3.0]);
        assert_eq!(mean_region_depth(&full, &halves).unwrap(), 2.0);
        let mixed = DepthMap::from_data(2, 2, vec![1.0, 2.0, 6.0, 100.0]);
        assert_eq!(mean_region_depth(&mask, &mixed).unwrap(), 3.0);
        let invalid = DepthMap::from_data(2, 2, vec![0.0, 0.0, 0.0, 5.0]);
        assert_eq!(mean_region_depth(&mask, &invalid).unwrap_err(), MetricsError::EmptyRegion);
    }

    #[test]
    fn box_depth_references() {
        let b = Box3::axis_aligned(Vec3::new(0.0, 0.0, 5.0), Vec3::new(1.0, 1.0, 0.5));
        assert_eq!(box_reference_depth(&b, &Pose::IDENTITY, DepthReference::Center), 5.0);
        assert_eq!(box_reference_depth(&b, &Pose::IDENTITY, DepthReference::NearestFace), 4.5);
    }

    #[test]
    fn report_serializes() {
        let a = [0.0, 0.0, 2.0, 2.0];
        let r = evaluate(&TrackEval { frames: vec![frame(0, Some(a), Some(a))] }, Some([640, 480]));
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["miou"]["value"], 1.0);
        assert!(json["depth_d"].is_null());
        assert_eq!(json["resolution"][0], 640);
    }
}
