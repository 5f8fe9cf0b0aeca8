//! Independent reference implementations shared by integration tests.
//!
//! Nothing here calls the library's geometry routines; inputs and outputs
//! use its plain data types only.

#![allow(dead_code)]

use cineforge_core::geometry::{Box3, Intrinsics, Pose, Rot3, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type M3 = [[f64; 3]; 3];

/// Rotation matrix of a unit quaternion `[w, x, y, z]`.
pub fn quat_matrix(q: [f64; 4]) -> M3 {
    let [w, x, y, z] = q;
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

fn mat_mul(a: &M3, b: &M3) -> M3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn mat_vec(m: &M3, v: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2])
}

fn mat_t_vec(m: &M3, v: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| m[0][i] * v[0] + m[1][i] * v[1] + m[2][i] * v[2])
}

fn euler_zyx(yaw: f64, pitch: f64, roll: f64) -> M3 {
    let (sy, cy) = yaw.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let (sr, cr) = roll.sin_cos();
    let rz = [[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]];
    let ry = [[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]];
    let rx = [[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]];
    mat_mul(&mat_mul(&rz, &ry), &rx)
}

/// Smallest box volume over an exhaustive Z-Y-X Euler grid.
///
/// A box is unchanged by half turns about its own axes, so yaw and roll in
/// `[0°, 180°)` with pitch in `[-90°, 90°]` reach every orientation class.
pub fn grid_obb_volume(points: &[Vec3], step_deg: f64) -> f64 {
    let pts: Vec<[f64; 3]> = points.iter().map(|p| [p.x, p.y, p.z]).collect();
    let n = (180.0 / step_deg).round() as usize;
    let mut best = f64::INFINITY;
    for iy in 0..n {
        for ip in 0..=n {
            for ir in 0..n {
                let m = euler_zyx(
                    (iy as f64 * step_deg).to_radians(),
                    (ip as f64 * step_deg - 90.0).to_radians(),
                    (ir as f64 * step_deg).to_radians(),
                );
                let axes = [0, 1, 2].map(|j| [m[0][j], m[1][j], m[2][j]]);
                let mut vol = 1.0;
                for a in &axes {
                    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                    for p in &pts {
                        let d = a[0] * p[0] + a[1] * p[1] + a[2] * p[2];
                        lo = lo.min(d);
                        hi = hi.max(d);
                    }
                    vol *= hi - lo;
                }
                best = best.min(vol);
            }
        }
    }
    best
}

/// Point clouds of assorted shapes with up to `max_points` points.
pub fn random_cloud(rng: &mut ChaCha8Rng, max_points: usize) -> Vec<Vec3> {
    let n = rng.random_range(8..=max_points);
    let q = random_rotation(rng);
    let m = quat_matrix(q.wxyz());
    let half: [f64; 3] = [rng.random_range(0.05..2.0), rng.random_range(0.05..2.0), rng.random_range(0.05..2.0)];
    let center = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
    let kind = rng.random_range(0..4);
    (0..n)
        .map(|_| {
            let mut l: [f64; 3] = [0, 1, 2].map(|i| rng.random_range(-1.0..1.0) * half[i]);
            match kind {
                // box surface
                0 => {
                    let axis = rng.random_range(0..3);
                    l[axis] = if rng.random_bool(0.5) { half[axis] } else { -half[axis] };
                }
                // ellipsoid shell
                1 => {
                    let r = (l[0] / half[0]).powi(2) + (l[1] / half[1]).powi(2) + (l[2] / half[2]).powi(2);
                    let s = 1.0 / r.sqrt().max(1e-9);
                    l = l.map(|v| v * s);
                }
                // gaussian blob
                2 => {
                    let g = |rng: &mut ChaCha8Rng| {
                        let (u1, u2): (f64, f64) = (rng.random_range(1e-12..1.0), rng.random());
                        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
                    };
                    l = [0, 1, 2].map(|i| g(rng) * half[i] * 0.5);
                }
                // box interior
                _ => {}
            }
            let w = mat_vec(&m, l);
            Vec3::new(w[0] + center[0], w[1] + center[1], w[2] + center[2])
        })
        .collect()
}

pub fn random_rotation(rng: &mut ChaCha8Rng) -> Rot3 {
    loop {
        let q = [0; 4].map(|_| rng.random_range(-1.0..1.0f64));
        let n2: f64 = q.iter().map(|v| v * v).sum();
        if n2 > 1e-4 && n2 <= 1.0 {
            return Rot3::from_quaternion(q[0], q[1], q[2], q[3]);
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Ray-cast hit at one pixel center: `(id, depth)` or `(0, 0.0)`.
///
/// The ray leaves the camera center through `(x + 0.5, y + 0.5)`; depth is
/// the camera-space z of the nearest slab-method intersection beyond `near`.
pub fn cast_pixel(boxes: &[(u32, Box3)], pose: &Pose, k: &Intrinsics, x: u32, y: u32, near: f64) -> (u32, f64) {
    let r_cam = quat_matrix(pose.rotation.wxyz());
    let t = [pose.translation.x, pose.translation.y, pose.translation.z];
    // camera center and direction in world space, parameterized by camera z
    let origin = mat_t_vec(&r_cam, [-t[0], -t[1], -t[2]]);
    let d_cam = [(x as f64 + 0.5 - k.cx) / k.fx, (y as f64 + 0.5 - k.cy) / k.fy, 1.0];
    let d = mat_t_vec(&r_cam, d_cam);
    let mut best = (0u32, f64::INFINITY);
    for (id, b) in boxes {
        let rb = quat_matrix(b.rotation.wxyz());
        let oc = [origin[0] - b.center.x, origin[1] - b.center.y, origin[2] - b.center.z];
        let lo = mat_t_vec(&rb, oc);
        let ld = mat_t_vec(&rb, d);
        let h = [b.half_extents.x, b.half_extents.y, b.half_extents.z];
        let (mut t0, mut t1) = (near, f64::INFINITY);
        let mut hit = true;
        for i in 0..3 {
            if ld[i].abs() < 1e-15 {
                if lo[i].abs() > h[i] {
                    hit = false;
                }
                continue;
            }
            let (a, c) = ((-h[i] - lo[i]) / ld[i], (h[i] - lo[i]) / ld[i]);
            t0 = t0.max(a.min(c));
            t1 = t1.min(a.max(c));
        }
        if hit && t0 <= t1 && t0 < best.1 {
            best = (*id, t0);
        }
    }
    if best.0 == 0 {
        (0, 0.0)
    } else {
        best
    }
}
