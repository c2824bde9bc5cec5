//! Floating-point geometry of points, triangles and tetrahedra.
//!
//! Degeneracy is decided with scale-relative thresholds so every predicate is
//! homogeneous: a triangle is degenerate when its area is below
//! `1e-14 * longest_edge^2`, a tetrahedron is coplanar when its minimal height
//! is below `1e-12 * diameter`.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub, SubAssign};

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const TRIANGLE_DEGENERACY: f64 = 1e-14;
pub const COPLANAR_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("degenerate triangle")]
    DegenerateTriangle,
    #[error("coplanar vertices")]
    Coplanar,
    #[error("degenerate plane: the three points are collinear")]
    DegeneratePlane,
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
}

/// A point or vector in R^3. Serializes as `[x, y, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub type Point3 = Vec3;

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

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    #[inline]
    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm2().sqrt()
    }

    #[inline]
    pub fn dist(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    /// Unit vector in the same direction; zero stays zero.
    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        if n > 0.0 {
            self / n
        } else {
            self
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn min_by_component(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max_by_component(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    /// Unsigned angle to `o` in `[0, π]`, computed with `atan2` for accuracy
    /// near 0 and π.
    pub fn angle(self, o: Vec3) -> f64 {
        self.cross(o).norm().atan2(self.dot(o))
    }

    /// Some unit vector orthogonal to `self` (which need not be normalized).
    pub fn any_orthonormal(self) -> Vec3 {
        let a = if self.x.abs() < 0.6 { Vec3::X } else { Vec3::Y };
        self.cross(a).normalized()
    }

    /// Component orthogonal to the unit vector `n`.
    pub fn reject(self, n: Vec3) -> Vec3 {
        self - n * self.dot(n)
    }

    /// Rotation about the unit axis `axis` by `angle` (Rodrigues).
    pub fn rotate(self, axis: Vec3, angle: f64) -> Vec3 {
        let (s, c) = angle.sin_cos();
        self * c + axis.cross(self) * s + axis * (axis.dot(self) * (1.0 - c))
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
    #[inline]
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
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    #[inline]
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Ordered quadruple of points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Tetra(pub [Point3; 4]);

/// Ordered triple of points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Triangle(pub [Point3; 3]);

impl Tetra {
    pub fn new(a: Point3, b: Point3, c: Point3, d: Point3) -> Self {
        Tetra([a, b, c, d])
    }

    pub fn scaled(&self, s: f64) -> Tetra {
        Tetra(self.0.map(|p| p * s))
    }

    pub fn translated(&self, t: Vec3) -> Tetra {
        Tetra(self.0.map(|p| p + t))
    }

    pub fn permuted(&self, perm: [usize; 4]) -> Tetra {
        Tetra(perm.map(|i| self.0[i]))
    }

    pub fn base(&self) -> Triangle {
        Triangle([self.0[0], self.0[1], self.0[2]])
    }

    pub fn diameter(&self) -> f64 {
        let v = &self.0;
        let mut d2: f64 = 0.0;
        for i in 0..4 {
            for j in (i + 1)..4 {
                d2 = d2.max((v[i] - v[j]).norm2());
            }
        }
        d2.sqrt()
    }
}

/// Twice the area vector of the triangle `(a, b, c)`.
#[inline]
fn area_vector(a: Point3, b: Point3, c: Point3) -> Vec3 {
    (b - a).cross(c - a)
}

pub fn triangle_area(a: Point3, b: Point3, c: Point3) -> f64 {
    0.5 * area_vector(a, b, c).norm()
}

fn longest_edge2(a: Point3, b: Point3, c: Point3) -> f64 {
    (a - b).norm2().max((a - c).norm2()).max((b - c).norm2())
}

pub fn triangle_is_degenerate(a: Point3, b: Point3, c: Point3) -> bool {
    triangle_area(a, b, c) < TRIANGLE_DEGENERACY * longest_edge2(a, b, c)
        || longest_edge2(a, b, c) == 0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplexMeasures {
    pub volume: f64,
    pub total_area: f64,
    pub diameter: f64,
    pub min_height: f64,
}

impl SimplexMeasures {
    pub fn is_coplanar(&self) -> bool {
        self.min_height < COPLANAR_TOLERANCE * self.diameter || self.diameter == 0.0
    }
}

const FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

pub fn simplex_measures(t: &Tetra) -> SimplexMeasures {
    let v = &t.0;
    let det = (v[1] - v[0]).cross(v[2] - v[0]).dot(v[3] - v[0]);
    let volume = det.abs() / 6.0;
    let mut total_area = 0.0;
    let mut min_height = f64::INFINITY;
    for f in FACES.iter() {
        let (a, b, c) = (v[f[0]], v[f[1]], v[f[2]]);
        let area = triangle_area(a, b, c);
        total_area += area;
        let h = if triangle_is_degenerate(a, b, c) {
            0.0
        } else {
            3.0 * volume / area
        };
        min_height = min_height.min(h);
    }
    let diameter = t.diameter();
    let min_height = min_height.min(diameter);
    let mut m = SimplexMeasures { volume, total_area, diameter, min_height };
    if m.is_coplanar() {
        m.volume = 0.0;
        m.min_height = 0.0;
    }
    m
}

/// Circumradius of a triangle, `|x-y||x-z||y-z| / (4 area)`.
pub fn circumradius_triangle(x: Point3, y: Point3, z: Point3) -> Result<f64, GeomError> {
    if triangle_is_degenerate(x, y, z) {
        return Err(GeomError::DegenerateTriangle);
    }
    let area = triangle_area(x, y, z);
    Ok(x.dist(y) * x.dist(z) * y.dist(z) / (4.0 * area))
}

/// Circumsphere radius from edge vectors relative to the first vertex.
pub fn circumsphere_radius(t: &Tetra) -> Result<f64, GeomError> {
    if simplex_measures(t).is_coplanar() {
        return Err(GeomError::Coplanar);
    }
    let v = &t.0;
    let (z1, z2, z3) = (v[1] - v[0], v[2] - v[0], v[3] - v[0]);
    let det = z3.dot(z1.cross(z2)).abs();
    let w = z2.cross(z3) * z1.norm2() + z3.cross(z1) * z2.norm2() + z1.cross(z2) * z3.norm2();
    Ok(w.norm() / (2.0 * det))
}

/// Unsigned distance from `p` to the plane through `a`, `b`, `c`.
pub fn point_plane_distance(p: Point3, a: Point3, b: Point3, c: Point3) -> Result<f64, GeomError> {
    if triangle_is_degenerate(a, b, c) {
        return Err(GeomError::DegeneratePlane);
    }
    let n = area_vector(a, b, c);
    Ok((p - a).dot(n).abs() / n.norm())
}

/// `min` over the 24 vertex pairings of the largest vertex displacement.
pub fn tetra_distance(t: &Tetra, t2: &Tetra) -> f64 {
    (0..4)
        .permutations(4)
        .map(|perm| {
            (0..4)
                .map(|i| t.0[i].dist(t2.0[perm[i]]))
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

fn wide_conditions(x0: Point3, x1: Point3, x2: Point3, theta: f64, d: f64) -> bool {
    let ball = 2.0 * d;
    if x1.dist(x0) > ball || x2.dist(x0) > ball {
        return false;
    }
    let sep = theta * d;
    if x0.dist(x1) < sep || x0.dist(x2) < sep || x1.dist(x2) < sep {
        return false;
    }
    let ang = (x1 - x0).angle(x2 - x0);
    ang >= theta && ang <= PI - theta
}

/// Membership in the class of `(θ,d)`-voluminous tetrahedra.
pub fn classify_voluminous(t: &Tetra, theta: f64, d: f64) -> bool {
    let [x0, x1, x2, x3] = t.0;
    if !wide_conditions(x0, x1, x2, theta, d) {
        return false;
    }
    if x3.dist(x0) > 2.0 * d {
        return false;
    }
    let sep = theta * d;
    if x3.dist(x0) < sep || x3.dist(x1) < sep || x3.dist(x2) < sep {
        return false;
    }
    match point_plane_distance(x3, x0, x1, x2) {
        Ok(h) => h >= sep,
        Err(_) => false,
    }
}

/// Membership in the class of `(θ,d)`-wide triangles.
pub fn classify_wide(tri: &Triangle, theta: f64, d: f64) -> bool {
    let [x0, x1, x2] = tri.0;
    wide_conditions(x0, x1, x2, theta, d)
}

/// Largest `θ < 1` for which `t` is `(θ,d)`-voluminous, or `None` when the
/// ball condition fails or the tetrahedron is degenerate.
pub fn voluminous_eta(t: &Tetra, d: f64) -> Option<f64> {
    let v = &t.0;
    if (1..4).any(|i| v[i].dist(v[0]) > 2.0 * d) {
        return None;
    }
    let mut min_sep = f64::INFINITY;
    for i in 0..4 {
        for j in (i + 1)..4 {
            min_sep = min_sep.min(v[i].dist(v[j]));
        }
    }
    let ang = (v[1] - v[0]).angle(v[2] - v[0]);
    let h = point_plane_distance(v[3], v[0], v[1], v[2]).ok()?;
    let eta = (min_sep / d).min(ang).min(PI - ang).min(h / d);
    if eta > 0.0 {
        // keep strictly inside (0,1) as the classes require
        Some(eta.min(1.0 - f64::EPSILON))
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlantedConstants {
    pub c0: f64,
    pub c1: f64,
}

/// Distance constants for points off a slanted plane:
/// `c0 = (1 - cos(φ1/2)) sin(2φ0) / 2`, `c1 = sin(2φ0) / 16`.
pub fn slanted_constants(phi0: f64, phi1: f64) -> Result<SlantedConstants, GeomError> {
    if !(phi0 > 0.0 && phi0 < PI / 2.0) {
        return Err(GeomError::OutOfRange(format!("phi0 = {phi0} not in (0, π/2)")));
    }
    if !(phi1 > 0.0 && phi1 < PI) {
        return Err(GeomError::OutOfRange(format!("phi1 = {phi1} not in (0, π)")));
    }
    let s = (2.0 * phi0).sin();
    Ok(SlantedConstants {
        c0: 0.5 * (1.0 - (phi1 / 2.0).cos()) * s,
        c1: s / 16.0,
    })
}

fn check_eta(eta: f64) -> Result<(), GeomError> {
    if eta > 0.0 && eta <= 0.5 {
        Ok(())
    } else {
        Err(GeomError::OutOfRange(format!("eta = {eta} not in (0, 1/2]")))
    }
}

/// Admissible vertex perturbation (relative to `d`) that keeps at least half
/// the height: `min(η⁵/10, η⁷/36)`. Sufficient, not tight.
pub fn perturbation_radius(eta: f64) -> Result<f64, GeomError> {
    check_eta(eta)?;
    Ok((eta.powi(5) / 10.0).min(eta.powi(7) / 36.0))
}

/// Stability radius for good tetrahedra: `min(η/20, ε(η)) / 2`.
pub fn stability_radius(eta: f64) -> Result<f64, GeomError> {
    Ok((eta / 20.0).min(perturbation_radius(eta)?) / 2.0)
}

/// `n` deterministic, nearly even directions in the cap of unit vectors
/// within angle `arccos(cos_min)` of `axis` (Fibonacci spiral; `cos θ` is
/// uniform on `[cos_min, 1]`).
pub fn fibonacci_cap(axis: Vec3, cos_min: f64, n: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let axis = axis.normalized();
    let e1 = axis.any_orthonormal();
    let e2 = axis.cross(e1);
    (0..n)
        .map(|i| {
            let c = 1.0 - (1.0 - cos_min) * (i as f64 + 0.5) / n as f64;
            let s = (1.0 - c * c).max(0.0).sqrt();
            let phi = golden * i as f64;
            axis * c + (e1 * phi.cos() + e2 * phi.sin()) * s
        })
        .collect()
}
