//! Pinhole camera math, rigid poses and oriented boxes.
//!
//! Conventions used throughout the crate:
//!
//! * right-handed frames; the camera looks down `+z`, with `+x` to the right
//!   and `+y` down in the image;
//! * "depth" is the camera-space `z` coordinate, not the ray length;
//! * a [`Pose`] maps **world to camera** coordinates (`x_c = R x_w + t`);
//! * rotation matrices are exported row-major.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("point is behind the camera (camera-space z = {0})")]
    BehindCamera(OrderedZ),
    #[error("depth must be positive, got {0}")]
    NonPositiveDepth(OrderedZ),
}

/// Wrapper so the error enum can stay `Eq` while carrying the offending value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderedZ(pub f64);

impl Eq for OrderedZ {}

impl fmt::Display for OrderedZ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };
    pub const X: Vec3 = Vec3 { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: Vec3 = Vec3 { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 1.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub const fn splat(v: f64) -> Self {
        Vec3 { x: v, y: v, z: v }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Unit vector in the same direction. Zero vectors stay zero.
    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        if n > 0.0 {
            self / n
        } else {
            self
        }
    }

    pub fn component_mul(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x * o.x, self.y * o.y, self.z * o.z)
    }

    pub fn min(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    /// Linear interpolation written as `a + (b - a) t`, so equal endpoints
    /// reproduce `a` bit-for-bit.
    pub fn lerp(self, o: Vec3, t: f64) -> Vec3 {
        Vec3::new(
            self.x + (o.x - self.x) * t,
            self.y + (o.y - self.y) * t,
            self.z + (o.z - self.z) * t,
        )
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

/// Row-major 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn from_rows(r0: Vec3, r1: Vec3, r2: Vec3) -> Mat3 {
        Mat3([r0.to_array(), r1.to_array(), r2.to_array()])
    }

    pub fn from_cols(c0: Vec3, c1: Vec3, c2: Vec3) -> Mat3 {
        Mat3::from_rows(c0, c1, c2).transpose()
    }

    pub fn row(&self, i: usize) -> Vec3 {
        Vec3::from(self.0[i])
    }

    pub fn col(&self, j: usize) -> Vec3 {
        Vec3::new(self.0[0][j], self.0[1][j], self.0[2][j])
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        Vec3::new(self.row(0).dot(v), self.row(1).dot(v), self.row(2).dot(v))
    }

    pub fn mul_mat(&self, o: &Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        Mat3(out)
    }

    pub fn determinant(&self) -> f64 {
        self.row(0).dot(self.row(1).cross(self.row(2)))
    }

    /// Row-major flattening.
    pub fn to_row_major(&self) -> [f64; 9] {
        let m = &self.0;
        [
            m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
        ]
    }

    pub fn from_row_major(a: &[f64; 9]) -> Mat3 {
        Mat3([[a[0], a[1], a[2]], [a[3], a[4], a[5]], [a[6], a[7], a[8]]])
    }
}

/// Rotation stored as a unit quaternion `(w, x, y, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Rot3 {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

impl From<[f64; 4]> for Rot3 {
    /// Raw components, not renormalized; use [`Rot3::from_quaternion`] when
    /// the input may be off the unit sphere.
    fn from(a: [f64; 4]) -> Self {
        Rot3 { w: a[0], x: a[1], y: a[2], z: a[3] }
    }
}

impl From<Rot3> for [f64; 4] {
    fn from(r: Rot3) -> Self {
        r.wxyz()
    }
}

impl Default for Rot3 {
    fn default() -> Self {
        Rot3::IDENTITY
    }
}

impl Rot3 {
    pub const IDENTITY: Rot3 = Rot3 { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    /// Normalizes the given quaternion; the zero quaternion maps to identity.
    pub fn from_quaternion(w: f64, x: f64, y: f64, z: f64) -> Rot3 {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if n == 0.0 || !n.is_finite() {
            return Rot3::IDENTITY;
        }
        Rot3 { w: w / n, x: x / n, y: y / n, z: z / n }
    }

    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Rot3 {
        let a = axis.normalized();
        let (s, c) = (angle * 0.5).sin_cos();
        Rot3::from_quaternion(c, a.x * s, a.y * s, a.z * s)
    }

    /// Intrinsic Z-Y-X (yaw, pitch, roll) composition `Rz(yaw) Ry(pitch) Rx(roll)`.
    pub fn from_euler_zyx(yaw: f64, pitch: f64, roll: f64) -> Rot3 {
        Rot3::from_axis_angle(Vec3::Z, yaw)
            .compose(Rot3::from_axis_angle(Vec3::Y, pitch))
            .compose(Rot3::from_axis_angle(Vec3::X, roll))
    }

    /// Converts a rotation matrix (Shepperd's method). The result is
    /// renormalized, so mildly non-orthonormal input is tolerated.
    pub fn from_matrix(m: &Mat3) -> Rot3 {
        let a = &m.0;
        let trace = a[0][0] + a[1][1] + a[2][2];
        let (w, x, y, z);
        if trace > 0.0 {
            let s = (trace + 1.0).sqrt() * 2.0;
            w = 0.25 * s;
            x = (a[2][1] - a[1][2]) / s;
            y = (a[0][2] - a[2][0]) / s;
            z = (a[1][0] - a[0][1]) / s;
        } else if a[0][0] > a[1][1] && a[0][0] > a[2][2] {
            let s = (1.0 + a[0][0] - a[1][1] - a[2][2]).sqrt() * 2.0;
            w = (a[2][1] - a[1][2]) / s;
            x = 0.25 * s;
            y = (a[0][1] + a[1][0]) / s;
            z = (a[0][2] + a[2][0]) / s;
        } else if a[1][1] > a[2][2] {
            let s = (1.0 + a[1][1] - a[0][0] - a[2][2]).sqrt() * 2.0;
            w = (a[0][2] - a[2][0]) / s;
            x = (a[0][1] + a[1][0]) / s;
            y = 0.25 * s;
            z = (a[1][2] + a[2][1]) / s;
        } else {
            let s = (1.0 + a[2][2] - a[0][0] - a[1][1]).sqrt() * 2.0;
            w = (a[1][0] - a[0][1]) / s;
            x = (a[0][2] + a[2][0]) / s;
            y = (a[1][2] + a[2][1]) / s;
            z = 0.25 * s;
        }
        Rot3::from_quaternion(w, x, y, z)
    }

    pub fn wxyz(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.wxyz().iter().all(|c| c.is_finite())
    }

    pub fn to_matrix(&self) -> Mat3 {
        let Rot3 { w, x, y, z } = *self;
        Mat3([
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ])
    }

    /// Hamilton product `self * other` (apply `other` first), renormalized.
    pub fn compose(self, o: Rot3) -> Rot3 {
        let (a, b) = (self, o);
        Rot3::from_quaternion(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }

    pub fn inverse(self) -> Rot3 {
        Rot3 { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    pub fn rotate(&self, v: Vec3) -> Vec3 {
        // v' = v + 2 q_v × (q_v × v + w v)
        let q = Vec3::new(self.x, self.y, self.z);
        let t = q.cross(v) * 2.0;
        v + t * self.w + q.cross(t)
    }

    fn dot(&self, o: &Rot3) -> f64 {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    /// Geodesic angle between two rotations, in radians.
    pub fn angle_to(&self, o: &Rot3) -> f64 {
        let d = self.dot(o).abs().min(1.0);
        2.0 * d.acos()
    }

    /// Shortest-arc spherical interpolation. Identical endpoints return `self`
    /// unchanged.
    pub fn slerp(self, o: Rot3, t: f64) -> Rot3 {
        if self == o {
            return self;
        }
        let mut b = o;
        let mut cos = self.dot(&o);
        if cos < 0.0 {
            b = Rot3 { w: -o.w, x: -o.x, y: -o.y, z: -o.z };
            cos = -cos;
        }
        let (wa, wb) = if cos > 1.0 - 1e-12 {
            (1.0 - t, t)
        } else {
            let theta = cos.min(1.0).acos();
            let s = theta.sin();
            (((1.0 - t) * theta).sin() / s, (t * theta).sin() / s)
        };
        Rot3::from_quaternion(
            wa * self.w + wb * b.w,
            wa * self.x + wb * b.x,
            wa * self.y + wb * b.y,
            wa * self.z + wb * b.z,
        )
    }
}

/// Rigid world-to-camera transform: `x_cam = rotation * x_world + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub rotation: Rot3,
    pub translation: Vec3,
}

impl Pose {
    pub const IDENTITY: Pose = Pose { rotation: Rot3::IDENTITY, translation: Vec3::ZERO };

    pub fn new(rotation: Rot3, translation: Vec3) -> Pose {
        Pose { rotation, translation }
    }

    pub fn from_translation(t: Vec3) -> Pose {
        Pose::new(Rot3::IDENTITY, t)
    }

    /// Extrinsics of a camera placed at `eye` looking at `target`. `down` is
    /// the world direction that should appear downward in the image.
    pub fn look_at(eye: Vec3, target: Vec3, down: Vec3) -> Pose {
        let forward = (target - eye).normalized();
        let right = down.cross(forward).normalized();
        let down = forward.cross(right).normalized();
        // rows of R are the camera axes expressed in world coordinates
        let r = Mat3::from_rows(right, down, forward);
        let rotation = Rot3::from_matrix(&r);
        Pose::new(rotation, -rotation.rotate(eye))
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        self.rotation.rotate(p) + self.translation
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose::new(
            self.rotation.compose(other.rotation),
            self.rotation.rotate(other.translation) + self.translation,
        )
    }

    pub fn inverse(&self) -> Pose {
        let r = self.rotation.inverse();
        Pose::new(r, -r.rotate(self.translation))
    }

    /// Camera center in world coordinates.
    pub fn camera_center(&self) -> Vec3 {
        self.inverse().translation
    }

    /// Row-major `[R | t]` as 12 reals: the nine rotation entries followed by
    /// the translation.
    pub fn to_rt_row(&self) -> [f64; 12] {
        let r = self.rotation.to_matrix().to_row_major();
        let mut out = [0.0; 12];
        out[..9].copy_from_slice(&r);
        out[9] = self.translation.x;
        out[10] = self.translation.y;
        out[11] = self.translation.z;
        out
    }

    pub fn from_rt_row(row: &[f64; 12]) -> Pose {
        let mut r = [0.0; 9];
        r.copy_from_slice(&row[..9]);
        Pose::new(
            Rot3::from_matrix(&Mat3::from_row_major(&r)),
            Vec3::new(row[9], row[10], row[11]),
        )
    }

    pub fn is_finite(&self) -> bool {
        self.rotation.is_finite() && self.translation.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Intrinsics {
        Intrinsics { fx, fy, cx, cy, width, height }
    }

    /// Square pixels, centered principal point, horizontal field of view in
    /// radians. Used when a clip does not ship its own intrinsics.
    pub fn from_horizontal_fov(hfov: f64, width: u32, height: u32) -> Intrinsics {
        let f = 0.5 * width as f64 / (0.5 * hfov).tan();
        Intrinsics::new(f, f, width as f64 * 0.5, height as f64 * 0.5, width, height)
    }

    /// Default used when none are supplied: 60° horizontal field of view.
    pub fn default_for(width: u32, height: u32) -> Intrinsics {
        Intrinsics::from_horizontal_fov(60f64.to_radians(), width, height)
    }

    /// Same camera resampled to a different raster size.
    pub fn scaled_to(&self, width: u32, height: u32) -> Intrinsics {
        if width == self.width && height == self.height {
            return *self;
        }
        let sx = width as f64 / self.width as f64;
        let sy = height as f64 / self.height as f64;
        Intrinsics::new(self.fx * sx, self.fy * sy, self.cx * sx, self.cy * sy, width, height)
    }

    /// Returns a description of the first violated invariant, if any.
    pub fn check(&self) -> Result<(), String> {
        let finite = [self.fx, self.fy, self.cx, self.cy].iter().all(|v| v.is_finite());
        if !finite {
            return Err("intrinsics must be finite".into());
        }
        if self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(format!("focal lengths must be positive (fx={}, fy={})", self.fx, self.fy));
        }
        if self.width == 0 || self.height == 0 {
            return Err("raster size must be positive".into());
        }
        if !(0.0..self.width as f64).contains(&self.cx) || !(0.0..self.height as f64).contains(&self.cy) {
            return Err(format!(
                "principal point ({}, {}) outside {}x{} raster",
                self.cx, self.cy, self.width, self.height
            ));
        }
        Ok(())
    }
}

/// A projected point: pixel coordinates and camera-space depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
}

/// Projects a camera-space point. Fails when it is not in front of the camera.
pub fn project_camera(pc: Vec3, k: &Intrinsics) -> Result<Projection, GeometryError> {
    if pc.z.is_nan() || pc.z <= 0.0 {
        return Err(GeometryError::BehindCamera(OrderedZ(pc.z)));
    }
    Ok(Projection {
        u: k.fx * pc.x / pc.z + k.cx,
        v: k.fy * pc.y / pc.z + k.cy,
        depth: pc.z,
    })
}

pub fn project(p: Vec3, pose: &Pose, k: &Intrinsics) -> Result<Projection, GeometryError> {
    project_camera(pose.apply(p), k)
}

/// Lifts a pixel with known depth into camera space.
pub fn unproject_camera(u: f64, v: f64, depth: f64, k: &Intrinsics) -> Result<Vec3, GeometryError> {
    if depth.is_nan() || depth <= 0.0 {
        return Err(GeometryError::NonPositiveDepth(OrderedZ(depth)));
    }
    Ok(Vec3::new((u - k.cx) / k.fx * depth, (v - k.cy) / k.fy * depth, depth))
}

/// Lifts a pixel with known depth into world space.
pub fn unproject(
    u: f64,
    v: f64,
    depth: f64,
    pose: &Pose,
    k: &Intrinsics,
) -> Result<Vec3, GeometryError> {
    let pc = unproject_camera(u, v, depth, k)?;
    Ok(pose.inverse().apply(pc))
}

/// Oriented 3D box. `rotation` maps box-local axes to world axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box3 {
    pub center: Vec3,
    pub half_extents: Vec3,
    #[serde(default)]
    pub rotation: Rot3,
}

impl Box3 {
    pub fn new(center: Vec3, half_extents: Vec3, rotation: Rot3) -> Box3 {
        Box3 { center, half_extents, rotation }
    }

    pub fn axis_aligned(center: Vec3, half_extents: Vec3) -> Box3 {
        Box3::new(center, half_extents, Rot3::IDENTITY)
    }

    pub fn volume(&self) -> f64 {
        8.0 * self.half_extents.x * self.half_extents.y * self.half_extents.z
    }

    /// The 8 corners. Corner `i` takes the `+` sign on local axis `k` when bit
    /// `k` of `i` is set, so index 0 is `(-hx,-hy,-hz)` and index 7 is
    /// `(+hx,+hy,+hz)`; local offsets are rotated, then translated.
    pub fn corners(&self) -> [Vec3; 8] {
        let h = self.half_extents;
        std::array::from_fn(|i| {
            let sx = if i & 1 != 0 { 1.0 } else { -1.0 };
            let sy = if i & 2 != 0 { 1.0 } else { -1.0 };
            let sz = if i & 4 != 0 { 1.0 } else { -1.0 };
            self.center + self.rotation.rotate(Vec3::new(sx * h.x, sy * h.y, sz * h.z))
        })
    }

    /// World point expressed in the box frame (origin at the center).
    pub fn to_local(&self, p: Vec3) -> Vec3 {
        self.rotation.inverse().rotate(p - self.center)
    }

    pub fn contains(&self, p: Vec3, tol: f64) -> bool {
        let l = self.to_local(p);
        l.x.abs() <= self.half_extents.x + tol
            && l.y.abs() <= self.half_extents.y + tol
            && l.z.abs() <= self.half_extents.z + tol
    }

    pub fn translated(&self, d: Vec3) -> Box3 {
        Box3::new(self.center + d, self.half_extents, self.rotation)
    }

    /// Box expressed in another frame given by `pose` (e.g. camera space).
    pub fn transformed(&self, pose: &Pose) -> Box3 {
        Box3::new(pose.apply(self.center), self.half_extents, pose.rotation.compose(self.rotation))
    }

    pub fn check(&self) -> Result<(), String> {
        if !self.center.is_finite() || !self.half_extents.is_finite() || !self.rotation.is_finite() {
            return Err("box has non-finite components".into());
        }
        let h = self.half_extents;
        if h.x <= 0.0 || h.y <= 0.0 || h.z <= 0.0 {
            return Err(format!("half extents must be positive, got ({}, {}, {})", h.x, h.y, h.z));
        }
        if (self.rotation.norm() - 1.0).abs() > 1e-9 {
            return Err(format!("rotation quaternion norm {} is not 1", self.rotation.norm()));
        }
        Ok(())
    }

    /// Triangle indices into [`Box3::corners`], two per face.
    pub const TRIANGLES: [[usize; 3]; 12] = [
        [0, 2, 6], [0, 6, 4], // -x
        [1, 5, 7], [1, 7, 3], // +x
        [0, 4, 5], [0, 5, 1], // -y
        [2, 3, 7], [2, 7, 6], // +y
        [0, 1, 3], [0, 3, 2], // -z
        [4, 6, 7], [4, 7, 5], // +z
    ];
}
