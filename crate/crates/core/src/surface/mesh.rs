use std::collections::HashMap;

use rand::Rng;

use super::bvh::{Aabb, Bvh};
use super::{SurfaceError, SurfacePoint};
use crate::geom::{triangle_area, triangle_is_degenerate, Point3, Vec3};

/// Fixed, generic ray directions for the parity test.
const PARITY_DIRECTIONS: [[f64; 3]; 3] = [
    [0.577_215_664_9, 0.318_309_886_2, 0.751_988_211_6],
    [-0.693_147_180_6, 0.618_033_988_7, 0.370_130_755_3],
    [0.141_421_356_2, -0.866_025_403_8, -0.479_425_538_6],
];

/// Indexed triangle mesh with the derived data needed by the surface oracle.
#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Point3>,
    faces: Vec<[usize; 3]>,
    face_areas: Vec<f64>,
    cumulative: Vec<f64>,
    total_area: f64,
    face_normals: Vec<Vec3>,
    vertex_normals: Vec<Vec3>,
    bvh: Bvh,
    watertight: bool,
    orientation_known: bool,
    dropped_faces: usize,
}

impl TriMesh {
    /// Builds a mesh, dropping degenerate faces. Normals point inward when the
    /// mesh is watertight (orientation found by a parity vote), otherwise they
    /// follow the face winding.
    pub fn new(vertices: Vec<Point3>, faces: Vec<[usize; 3]>) -> Result<TriMesh, SurfaceError> {
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(SurfaceError::NonFinite(format!("vertex {i}")));
        }
        for (k, f) in faces.iter().enumerate() {
            if f.iter().any(|&i| i >= vertices.len()) {
                return Err(SurfaceError::Malformed { line: 0, message: format!("face {k} index out of range") });
            }
        }
        let before = faces.len();
        let faces: Vec<[usize; 3]> = faces
            .into_iter()
            .filter(|f| !triangle_is_degenerate(vertices[f[0]], vertices[f[1]], vertices[f[2]]))
            .collect();
        let dropped_faces = before - faces.len();
        if dropped_faces > 0 {
            log::warn!("dropped {dropped_faces} zero-area faces");
        }
        if faces.is_empty() {
            return Err(SurfaceError::EmptyMesh);
        }
        let tri = |f: &[usize; 3]| [vertices[f[0]], vertices[f[1]], vertices[f[2]]];
        let face_areas: Vec<f64> = faces.iter().map(|f| triangle_area(vertices[f[0]], vertices[f[1]], vertices[f[2]])).collect();
        let mut cumulative = Vec::with_capacity(faces.len());
        let mut acc = 0.0;
        for a in &face_areas {
            acc += a;
            cumulative.push(acc);
        }
        let tris: Vec<[Point3; 3]> = faces.iter().map(tri).collect();
        let bvh = Bvh::build(&tris);
        let face_normals: Vec<Vec3> = tris.iter().map(|t| (t[1] - t[0]).cross(t[2] - t[0]).normalized()).collect();
        let watertight = is_watertight(&faces);
        let mut mesh = TriMesh {
            vertex_normals: Vec::new(),
            vertices,
            faces,
            face_areas,
            cumulative,
            total_area: acc,
            face_normals,
            bvh,
            watertight,
            orientation_known: false,
            dropped_faces,
        };
        if watertight && mesh.winding_points_outward() {
            for n in &mut mesh.face_normals {
                *n = -*n;
            }
        }
        mesh.orientation_known = watertight;
        mesh.vertex_normals = mesh.angle_weighted_normals();
        Ok(mesh)
    }

    fn winding_points_outward(&self) -> bool {
        let stride = (self.faces.len() / 257).max(1);
        let mut votes: i64 = 0;
        for f in (0..self.faces.len()).step_by(stride) {
            let t = self.triangle(f);
            let c = (t[0] + t[1] + t[2]) / 3.0;
            let step = 1e-4 * self.face_areas[f].sqrt();
            let inward = self.parity_inside(c + self.face_normals[f] * step);
            votes += if inward { -1 } else { 1 };
        }
        votes > 0
    }

    fn angle_weighted_normals(&self) -> Vec<Vec3> {
        let mut acc = vec![Vec3::ZERO; self.vertices.len()];
        for (f, face) in self.faces.iter().enumerate() {
            for k in 0..3 {
                let p = self.vertices[face[k]];
                let a = self.vertices[face[(k + 1) % 3]] - p;
                let b = self.vertices[face[(k + 2) % 3]] - p;
                acc[face[k]] += self.face_normals[f] * a.angle(b);
            }
        }
        acc.into_iter().map(Vec3::normalized).collect()
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn face_areas(&self) -> &[f64] {
        &self.face_areas
    }

    pub fn face_normal(&self, f: usize) -> Vec3 {
        self.face_normals[f]
    }

    pub fn vertex_normals(&self) -> &[Vec3] {
        &self.vertex_normals
    }

    pub fn total_area(&self) -> f64 {
        self.total_area
    }

    pub fn is_watertight(&self) -> bool {
        self.watertight
    }

    pub fn orientation_known(&self) -> bool {
        self.orientation_known
    }

    pub fn dropped_faces(&self) -> usize {
        self.dropped_faces
    }

    pub fn bounds(&self) -> Aabb {
        self.bvh.bounds()
    }

    pub fn triangle(&self, f: usize) -> [Point3; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn vertex_point(&self, i: usize) -> SurfacePoint {
        SurfacePoint { position: self.vertices[i], normal: self.vertex_normals[i] }
    }

    /// Surface point at barycentric coordinates `(1-s-t, s, t)` of face `f`,
    /// with the interpolated vertex normal.
    pub fn face_point(&self, f: usize, s: f64, t: f64) -> SurfacePoint {
        let [a, b, c] = self.faces[f];
        let w = [1.0 - s - t, s, t];
        let position = self.vertices[a] * w[0] + self.vertices[b] * w[1] + self.vertices[c] * w[2];
        let n = self.vertex_normals[a] * w[0] + self.vertex_normals[b] * w[1] + self.vertex_normals[c] * w[2];
        let normal = if n.norm() > 1e-8 { n.normalized() } else { self.face_normals[f] };
        SurfacePoint { position, normal }
    }

    /// Face index for a uniform variate in `[0, total_area)`.
    pub fn face_for_area(&self, x: f64) -> usize {
        self.cumulative.partition_point(|&c| c <= x).min(self.faces.len() - 1)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SurfacePoint {
        let f = self.face_for_area(rng.random::<f64>() * self.total_area);
        self.sample_face(f, rng)
    }

    pub fn sample_face<R: Rng + ?Sized>(&self, f: usize, rng: &mut R) -> SurfacePoint {
        let r1 = rng.random::<f64>().sqrt();
        let r2 = rng.random::<f64>();
        self.face_point(f, r1 * (1.0 - r2), r1 * r2)
    }

    fn segment_params(&self, a: Point3, b: Point3) -> Vec<f64> {
        let mut cand = Vec::new();
        self.bvh.segment_candidates(a, b, &mut cand);
        let d = b - a;
        let mut ts: Vec<f64> = cand
            .into_iter()
            .filter_map(|f| segment_triangle(a, d, &self.triangle(f)))
            .collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup_by(|x, y| (*x - *y).abs() <= 1e-10);
        ts
    }

    pub fn segment_hits(&self, a: Point3, b: Point3) -> Vec<Point3> {
        let d = b - a;
        self.segment_params(a, b).into_iter().map(|t| a + d * t).collect()
    }

    fn parity_inside(&self, p: Point3) -> bool {
        let bb = self.bounds();
        let reach = 2.0 * bb.diagonal() + p.dist(bb.centre()) + 1.0;
        let odd = PARITY_DIRECTIONS
            .iter()
            .filter(|d| {
                let d = Vec3::from(**d).normalized();
                self.segment_params(p, p + d * reach).len() % 2 == 1
            })
            .count();
        odd >= 2
    }

    pub fn inside(&self, p: Point3) -> Result<bool, SurfaceError> {
        if !self.watertight {
            return Err(SurfaceError::NoInterior);
        }
        Ok(self.parity_inside(p))
    }

    /// Nearest point on the mesh, with its interpolated normal.
    pub fn closest_point(&self, p: Point3) -> SurfacePoint {
        let (f, _) = self
            .bvh
            .nearest(p, |f| {
                let (q, _, _) = closest_on_triangle(p, &self.triangle(f));
                (q - p).norm2()
            })
            .expect("mesh is non-empty");
        let (_, s, t) = closest_on_triangle(p, &self.triangle(f));
        self.face_point(f, s, t)
    }

    pub fn ball_faces(&self, c: Point3, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.bvh.ball_candidates(c, r, &mut out);
        out.sort_unstable();
        out
    }

    /// Copy with every vertex transformed by `f`.
    pub fn map_vertices(&self, f: impl Fn(Point3) -> Point3) -> Result<TriMesh, SurfaceError> {
        TriMesh::new(self.vertices.iter().map(|&p| f(p)).collect(), self.faces.clone())
    }
}

/// Möller–Trumbore intersection of `a + t d` (`t ∈ [0,1]`) with a triangle,
/// with a small barycentric tolerance so edge crossings are not lost.
fn segment_triangle(a: Point3, d: Vec3, t: &[Point3; 3]) -> Option<f64> {
    const EPS: f64 = 1e-10;
    let e1 = t[1] - t[0];
    let e2 = t[2] - t[0];
    let p = d.cross(e2);
    let det = e1.dot(p);
    let scale = e1.norm() * e2.norm() * d.norm();
    if det.abs() <= 1e-14 * scale {
        return None;
    }
    let inv = 1.0 / det;
    let s = a - t[0];
    let u = s.dot(p) * inv;
    if !(-EPS..=1.0 + EPS).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = d.dot(q) * inv;
    if v < -EPS || u + v > 1.0 + EPS {
        return None;
    }
    let tt = e2.dot(q) * inv;
    (-EPS..=1.0 + EPS).contains(&tt).then(|| tt.clamp(0.0, 1.0))
}

/// Closest point on a triangle (Ericson's region test). Returns the point and
/// its barycentric coordinates `(s, t)` with respect to vertices 1 and 2.
pub(crate) fn closest_on_triangle(p: Point3, tri: &[Point3; 3]) -> (Point3, f64, f64) {
    let [a, b, c] = *tri;
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (a, 0.0, 0.0);
    }
    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (b, 1.0, 0.0);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + ab * v, v, 0.0);
    }
    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (c, 0.0, 1.0);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + ac * w, 0.0, w);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, 1.0 - w, w);
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, v, w)
}

fn is_watertight(faces: &[[usize; 3]]) -> bool {
    // undirected edge -> (count, signed orientation sum)
    let mut edges: HashMap<(usize, usize), (u32, i32)> = HashMap::new();
    for f in faces {
        for k in 0..3 {
            let (i, j) = (f[k], f[(k + 1) % 3]);
            let (key, sign) = if i < j { ((i, j), 1) } else { ((j, i), -1) };
            let e = edges.entry(key).or_insert((0, 0));
            e.0 += 1;
            e.1 += sign;
        }
    }
    edges.values().all(|&(n, s)| n == 2 && s == 0)
}
