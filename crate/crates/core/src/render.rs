//! Z-buffered rasterization of boxes into depth and entity-id maps.
//!
//! Boxes are opaque solids drawn as 12 triangles each. Triangles are clipped
//! against the near plane in camera space, projected, and scanned at pixel
//! centers `(x + 0.5, y + 0.5)`. Depth is interpolated as `1/z`, which is
//! exact for planar faces, and the nearest camera-space `z` wins. Ties keep
//! the entity drawn first (ascending id).

use serde::{Deserialize, Serialize};

use crate::geometry::{Box3, Intrinsics, Vec3};
use crate::par::{self, Exec};
use crate::raster::{DepthMap, IdMap};
use crate::scene::{Scene, SceneSample};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderSettings {
    /// Output raster size; defaults to the intrinsics raster. Other sizes
    /// rescale the intrinsics.
    pub width: Option<u32>,
    pub height: Option<u32>,
    pub near: f64,
    pub far: f64,
}

impl Default for RenderSettings {
    fn default() -> Self {
        RenderSettings { width: None, height: None, near: 0.05, far: 1000.0 }
    }
}

impl RenderSettings {
    pub fn sized(width: u32, height: u32) -> RenderSettings {
        RenderSettings { width: Some(width), height: Some(height), ..Default::default() }
    }

    /// Intrinsics for the output raster.
    pub fn intrinsics_for(&self, k: &Intrinsics) -> Intrinsics {
        k.scaled_to(self.width.unwrap_or(k.width), self.height.unwrap_or(k.height))
    }

    pub fn check(&self) -> Result<(), String> {
        if !(self.near > 0.0 && self.far > self.near && self.far.is_finite()) {
            return Err(format!("need 0 < near < far, got near={} far={}", self.near, self.far));
        }
        if self.width == Some(0) || self.height == Some(0) {
            return Err("raster size must be positive".into());
        }
        Ok(())
    }
}

struct Target<'a> {
    k: &'a Intrinsics,
    depth: &'a mut DepthMap,
    ids: &'a mut IdMap,
    far: f64,
}

#[derive(Clone, Copy)]
struct ScreenVertex {
    u: f64,
    v: f64,
    inv_z: f64,
}

fn clip_near(tri: [Vec3; 3], near: f64) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(4);
    for i in 0..3 {
        let a = tri[i];
        let b = tri[(i + 1) % 3];
        let a_in = a.z >= near;
        let b_in = b.z >= near;
        if a_in {
            out.push(a);
        }
        if a_in != b_in {
            let t = (near - a.z) / (b.z - a.z);
            let mut p = a.lerp(b, t);
            p.z = near;
            out.push(p);
        }
    }
    out
}

fn edge(a: ScreenVertex, b: ScreenVertex, px: f64, py: f64) -> f64 {
    (b.u - a.u) * (py - a.v) - (b.v - a.v) * (px - a.u)
}

fn draw_triangle(t: &mut Target<'_>, v: [ScreenVertex; 3], id: u32) {
    let area = edge(v[0], v[1], v[2].u, v[2].v);
    if area == 0.0 || !area.is_finite() {
        return;
    }
    let sign = area.signum();
    let (w, h) = (t.k.width as i64, t.k.height as i64);
    let min_u = v.iter().map(|p| p.u).fold(f64::INFINITY, f64::min);
    let max_u = v.iter().map(|p| p.u).fold(f64::NEG_INFINITY, f64::max);
    let min_v = v.iter().map(|p| p.v).fold(f64::INFINITY, f64::min);
    let max_v = v.iter().map(|p| p.v).fold(f64::NEG_INFINITY, f64::max);
    let x0 = ((min_u - 0.5).ceil() as i64).max(0);
    let x1 = ((max_u - 0.5).floor() as i64).min(w - 1);
    let y0 = ((min_v - 0.5).ceil() as i64).max(0);
    let y1 = ((max_v - 0.5).floor() as i64).min(h - 1);
    for y in y0..=y1 {
        let py = y as f64 + 0.5;
        for x in x0..=x1 {
            let px = x as f64 + 0.5;
            let w0 = edge(v[1], v[2], px, py) * sign;
            let w1 = edge(v[2], v[0], px, py) * sign;
            let w2 = edge(v[0], v[1], px, py) * sign;
            if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
                continue;
            }
            let a = area * sign;
            let inv_z = (w0 * v[0].inv_z + w1 * v[1].inv_z + w2 * v[2].inv_z) / a;
            let z = 1.0 / inv_z;
            if z.is_nan() || z > t.far {
                continue;
            }
            let idx = (y * w + x) as usize;
            let cur = t.depth.data[idx];
            let zf = z as f32;
            if cur == DepthMap::SENTINEL || zf < cur {
                t.depth.data[idx] = zf;
                t.ids.data[idx] = id;
            }
        }
    }
}

fn draw_box(t: &mut Target<'_>, camera_box: &Box3, id: u32, near: f64) {
    let corners = camera_box.corners();
    for tri in Box3::TRIANGLES {
        let poly = clip_near([corners[tri[0]], corners[tri[1]], corners[tri[2]]], near);
        if poly.len() < 3 {
            continue;
        }
        let sv: Vec<ScreenVertex> = poly
            .iter()
            .map(|p| ScreenVertex {
                u: t.k.fx * p.x / p.z + t.k.cx,
                v: t.k.fy * p.y / p.z + t.k.cy,
                inv_z: 1.0 / p.z,
            })
            .collect();
        for i in 1..sv.len() - 1 {
            draw_triangle(t, [sv[0], sv[i], sv[i + 1]], id);
        }
    }
}

/// Renders one resolved frame. `k` is the scene camera's intrinsics; the
/// output raster follows `s`.
pub fn render_frame(sample: &SceneSample, k: &Intrinsics, s: &RenderSettings) -> (DepthMap, IdMap) {
    let k = s.intrinsics_for(k);
    let mut depth = DepthMap::new(k.width, k.height);
    let mut ids = IdMap::new(k.width, k.height);
    let mut target = Target { k: &k, depth: &mut depth, ids: &mut ids, far: s.far };
    for (&id, b) in &sample.boxes {
        let cb = b.transformed(&sample.camera_pose);
        draw_box(&mut target, &cb, id, s.near);
    }
    (depth, ids)
}

pub fn render_sequence(scene: &Scene, s: &RenderSettings) -> Vec<(DepthMap, IdMap)> {
    render_sequence_with(scene, s, Exec::default())
}

/// Frames are independent and may render in parallel; output is in frame order.
pub fn render_sequence_with(scene: &Scene, s: &RenderSettings, exec: Exec) -> Vec<(DepthMap, IdMap)> {
    par::map_range(exec, scene.frame_count as usize, |f| {
        let sample = scene.resolve(f as u32).expect("frame in range");
        render_frame(&sample, &scene.camera.intrinsics, s)
    })
}
