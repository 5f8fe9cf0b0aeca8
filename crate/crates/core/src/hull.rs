//! Convex hulls in 3D (incremental, with a geometric tolerance) and 2D
//! (monotone chain). The 3D hull is the substrate for box fitting.

use std::collections::{HashMap, HashSet, VecDeque};

use thiserror::Error;

use crate::geometry::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degeneracy {
    Empty,
    Coincident,
    Collinear,
    Coplanar,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HullError {
    #[error("input is degenerate for a 3D hull: {0:?}")]
    DegenerateInput(Degeneracy),
    #[error("input contains non-finite coordinates")]
    NonFinite,
}

/// Closed triangulated hull. Faces wind counter-clockwise when seen from
/// outside, so `(b - a) × (c - a)` points outward.
#[derive(Debug, Clone)]
pub struct ConvexHull {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
}

impl ConvexHull {
    pub fn face_normal(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.faces[f];
        let (a, b, c) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        (b - a).cross(c - a).normalized()
    }

    /// Signed distance of `p` to the plane of face `f` (positive outside).
    pub fn signed_distance(&self, f: usize, p: Vec3) -> f64 {
        let n = self.face_normal(f);
        n.dot(p - self.vertices[self.faces[f][0]])
    }

    /// Largest signed distance of `p` over all face planes; `<= 0` means inside.
    pub fn max_signed_distance(&self, p: Vec3) -> f64 {
        (0..self.faces.len())
            .map(|f| self.signed_distance(f, p))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn volume(&self) -> f64 {
        let o = self.vertices[0];
        self.faces
            .iter()
            .map(|&[a, b, c]| {
                (self.vertices[a] - o).dot((self.vertices[b] - o).cross(self.vertices[c] - o)) / 6.0
            })
            .sum()
    }
}

/// Diagonal of the axis-aligned bounding box of `points`.
pub fn bbox_diagonal(points: &[Vec3]) -> f64 {
    let mut lo = Vec3::splat(f64::INFINITY);
    let mut hi = Vec3::splat(f64::NEG_INFINITY);
    for &p in points {
        lo = lo.min(p);
        hi = hi.max(p);
    }
    if points.is_empty() {
        0.0
    } else {
        (hi - lo).norm()
    }
}

#[derive(Clone, Copy)]
struct Face {
    v: [usize; 3],
    normal: Vec3,
    offset: f64,
}

impl Face {
    fn new(points: &[Vec3], v: [usize; 3]) -> Face {
        let (a, b, c) = (points[v[0]], points[v[1]], points[v[2]]);
        let normal = (b - a).cross(c - a).normalized();
        Face { v, normal, offset: normal.dot(a) }
    }

    fn distance(&self, p: Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }

    fn edges(&self) -> [(usize, usize); 3] {
        let [a, b, c] = self.v;
        [(a, b), (b, c), (c, a)]
    }
}

/// Relative tolerance (times the bbox diagonal) below which a point counts as
/// lying on a face plane.
const ON_PLANE_REL: f64 = 1e-10;
/// Relative extent below which the input counts as lower-dimensional.
const DEGENERATE_REL: f64 = 1e-9;

/// Incremental 3D convex hull.
///
/// Points closer than `1e-10 × bbox diagonal` to the current hull are treated
/// as inside, which keeps large coplanar patches (typical of depth-map
/// clouds) from producing slivers.
pub fn convex_hull(points: &[Vec3]) -> Result<ConvexHull, HullError> {
    if points.iter().any(|p| !p.is_finite()) {
        return Err(HullError::NonFinite);
    }
    if points.is_empty() {
        return Err(HullError::DegenerateInput(Degeneracy::Empty));
    }
    let diag = bbox_diagonal(points);
    let deg_eps = DEGENERATE_REL * diag.max(f64::MIN_POSITIVE);
    let eps = ON_PLANE_REL * diag;

    let simplex = initial_simplex(points, deg_eps)?;
    let centroid = simplex.iter().fold(Vec3::ZERO, |acc, &i| acc + points[i]) / 4.0;

    let mut faces: Vec<Option<Face>> = Vec::new();
    let mut edge_owner: HashMap<(usize, usize), usize> = HashMap::new();

    let add_face = |faces: &mut Vec<Option<Face>>, edge_owner: &mut HashMap<(usize, usize), usize>, v: [usize; 3]| {
        let f = Face::new(points, v);
        let idx = faces.len();
        for e in f.edges() {
            edge_owner.insert(e, idx);
        }
        faces.push(Some(f));
    };

    let [a, b, c, d] = simplex;
    for tri in [[a, b, c], [a, b, d], [a, c, d], [b, c, d]] {
        let f = Face::new(points, tri);
        let v = if f.distance(centroid) > 0.0 { [tri[0], tri[2], tri[1]] } else { tri };
        add_face(&mut faces, &mut edge_owner, v);
    }

    // conflict lists: every point still outside the hull belongs to exactly
    // one face it is outside of (the farthest at assignment time)
    let mut outside: Vec<Vec<usize>> = vec![Vec::new(); faces.len()];
    let in_simplex: HashSet<usize> = simplex.iter().copied().collect();
    let all: Vec<usize> = (0..points.len()).filter(|i| !in_simplex.contains(i)).collect();
    assign(points, &faces, 0, &all, eps, &mut outside);

    let mut fi = 0;
    while fi < faces.len() {
        if faces[fi].is_none() || outside[fi].is_empty() {
            fi += 1;
            continue;
        }
        let face = faces[fi].expect("live face");
        let eye = *outside[fi]
            .iter()
            .max_by(|&&a, &&b| face.distance(points[a]).total_cmp(&face.distance(points[b])).then(b.cmp(&a)))
            .expect("non-empty");
        let p = points[eye];

        // grow the visible region across shared edges
        let mut visible = HashSet::from([fi]);
        let mut queue = VecDeque::from([fi]);
        while let Some(vi) = queue.pop_front() {
            let face = faces[vi].expect("live face");
            for (u, v) in face.edges() {
                if let Some(&nb) = edge_owner.get(&(v, u)) {
                    if !visible.contains(&nb) && faces[nb].expect("live face").distance(p) > eps {
                        visible.insert(nb);
                        queue.push_back(nb);
                    }
                }
            }
        }

        let mut horizon = Vec::new();
        for &vi in &visible {
            let face = faces[vi].expect("live face");
            for (u, v) in face.edges() {
                let twin_visible = edge_owner.get(&(v, u)).is_some_and(|nb| visible.contains(nb));
                if !twin_visible {
                    horizon.push((u, v));
                }
            }
        }
        let mut sorted: Vec<usize> = visible.into_iter().collect();
        sorted.sort_unstable();
        let mut orphans = Vec::new();
        for &vi in &sorted {
            let face = faces[vi].take().expect("live face");
            for e in face.edges() {
                if edge_owner.get(&e) == Some(&vi) {
                    edge_owner.remove(&e);
                }
            }
            orphans.extend(std::mem::take(&mut outside[vi]).into_iter().filter(|&q| q != eye));
        }
        orphans.sort_unstable();
        horizon.sort_unstable();
        let first_new = faces.len();
        for (u, v) in horizon {
            add_face(&mut faces, &mut edge_owner, [u, v, eye]);
            outside.push(Vec::new());
        }
        assign(points, &faces, first_new, &orphans, eps, &mut outside);
    }

    // compact vertex indices in first-use order
    let mut remap: HashMap<usize, usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut out_faces = Vec::new();
    for f in faces.into_iter().flatten() {
        let mut tri = [0; 3];
        for (slot, &v) in tri.iter_mut().zip(f.v.iter()) {
            *slot = *remap.entry(v).or_insert_with(|| {
                vertices.push(points[v]);
                vertices.len() - 1
            });
        }
        out_faces.push(tri);
    }
    Ok(ConvexHull { vertices, faces: out_faces })
}

/// Gives each point in `candidates` to the face from `first_face` on that it
/// is farthest outside of; points inside all of them are discarded.
fn assign(points: &[Vec3], faces: &[Option<Face>], first_face: usize, candidates: &[usize], eps: f64, outside: &mut [Vec<usize>]) {
    for &pi in candidates {
        let p = points[pi];
        let mut best = (None, eps);
        for (fi, f) in faces.iter().enumerate().skip(first_face) {
            if let Some(f) = f {
                let d = f.distance(p);
                if d > best.1 {
                    best = (Some(fi), d);
                }
            }
        }
        if let (Some(fi), _) = best {
            outside[fi].push(pi);
        }
    }
}

fn initial_simplex(points: &[Vec3], deg_eps: f64) -> Result<[usize; 4], HullError> {
    let i0 = (0..points.len())
        .min_by(|&a, &b| points[a].x.total_cmp(&points[b].x))
        .expect("non-empty");
    let p0 = points[i0];
    let (i1, d1) = farthest(points, |p| (p - p0).norm());
    if d1 <= deg_eps {
        return Err(HullError::DegenerateInput(Degeneracy::Coincident));
    }
    let dir = (points[i1] - p0).normalized();
    let (i2, d2) = farthest(points, |p| (p - p0).cross(dir).norm());
    if d2 <= deg_eps {
        return Err(HullError::DegenerateInput(Degeneracy::Collinear));
    }
    let n = (points[i1] - p0).cross(points[i2] - p0).normalized();
    let (i3, d3) = farthest(points, |p| n.dot(p - p0).abs());
    if d3 <= deg_eps {
        return Err(HullError::DegenerateInput(Degeneracy::Coplanar));
    }
    Ok([i0, i1, i2, i3])
}

fn farthest(points: &[Vec3], metric: impl Fn(Vec3) -> f64) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &p) in points.iter().enumerate() {
        let d = metric(p);
        if d > best.1 {
            best = (i, d);
        }
    }
    best
}

fn cross2(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Andrew's monotone chain. Returns the hull counter-clockwise without
/// collinear points; inputs of fewer than three distinct points come back
/// as-is (deduplicated).
pub fn convex_hull_2d(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross2(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross2(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cube() -> Vec<Vec3> {
        (0..8)
            .map(|i| {
                Vec3::new(
                    if i & 1 != 0 { 0.5 } else { -0.5 },
                    if i & 2 != 0 { 0.5 } else { -0.5 },
                    if i & 4 != 0 { 0.5 } else { -0.5 },
                )
            })
            .collect()
    }

    fn assert_closed_and_outward(h: &ConvexHull, input: &[Vec3]) {
        let mut edges = HashSet::new();
        for &[a, b, c] in &h.faces {
            for e in [(a, b), (b, c), (c, a)] {
                assert!(edges.insert(e), "duplicate directed edge {e:?}");
            }
        }
        for &(a, b) in &edges {
            assert!(edges.contains(&(b, a)), "open edge {a}-{b}");
        }
        let tol = 1e-9 * bbox_diagonal(input);
        for &p in input {
            assert!(h.max_signed_distance(p) <= tol);
        }
        assert!(h.volume() > 0.0);
    }

    #[test]
    fn cube_hull() {
        let h = convex_hull(&cube()).unwrap();
        assert_eq!(h.vertices.len(), 8);
        assert_eq!(h.faces.len(), 12);
        assert!((h.volume() - 1.0).abs() < 1e-12);
        assert_closed_and_outward(&h, &cube());
    }

    #[test]
    fn interior_point_excluded() {
        let mut pts = cube();
        pts.push(Vec3::ZERO);
        let h = convex_hull(&pts).unwrap();
        assert_eq!(h.vertices.len(), 8);
        assert_eq!(h.faces.len(), 12);
        assert!(!h.vertices.contains(&Vec3::ZERO));
    }

    #[test]
    fn degenerate_inputs() {
        let coplanar = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
        ];
        assert_eq!(convex_hull(&coplanar).unwrap_err(), HullError::DegenerateInput(Degeneracy::Coplanar));
        let line: Vec<Vec3> = (0..5).map(|i| Vec3::X * i as f64).collect();
        assert_eq!(convex_hull(&line).unwrap_err(), HullError::DegenerateInput(Degeneracy::Collinear));
        let same = vec![Vec3::splat(2.0); 3];
        assert_eq!(convex_hull(&same).unwrap_err(), HullError::DegenerateInput(Degeneracy::Coincident));
        assert_eq!(convex_hull(&[]).unwrap_err(), HullError::DegenerateInput(Degeneracy::Empty));
    }

    #[test]
    fn random_clouds_are_contained() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [10, 50, 300, 2000] {
            let pts: Vec<Vec3> = (0..n)
                .map(|_| Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-2.0..2.0), rng.random_range(-0.5..0.5)))
                .collect();
            let h = convex_hull(&pts).unwrap();
            assert_closed_and_outward(&h, &pts);
        }
    }

    #[test]
    fn grid_on_box_surface() {
        // many exactly coplanar points, as produced by depth maps of boxes
        let mut pts = Vec::new();
        for i in 0..=20 {
            for j in 0..=20 {
                let (a, b) = (i as f64 / 20.0, j as f64 / 20.0);
                pts.push(Vec3::new(a, b, 0.0));
                pts.push(Vec3::new(a, b, 1.0));
                pts.push(Vec3::new(a, 0.0, b));
                pts.push(Vec3::new(0.0, a, b));
            }
        }
        let h = convex_hull(&pts).unwrap();
        assert_closed_and_outward(&h, &pts);
        assert!((h.volume() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn hull_2d_square_with_collinear_points() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [0.5, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]];
        let h = convex_hull_2d(&pts);
        assert_eq!(h, vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
    }
}
