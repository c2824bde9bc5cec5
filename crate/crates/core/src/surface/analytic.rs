//! Closed-form surfaces: sphere, torus, the saddle graph `z = xy` and a
//! capsule, all centred at the origin.
//!
//! Every kind is covered by rectangular parameter patches on which the area
//! element is known, which gives area-uniform sampling (rejection against the
//! largest area element of the patch) and the cell machinery used by
//! patch-restricted queries.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::poly;
use super::{SurfaceError, SurfacePoint};
use crate::geom::{Point3, Vec3};

const TAU: f64 = 2.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyticSurface {
    Sphere { radius: f64 },
    Torus { major: f64, minor: f64 },
    /// Graph of `f(x, y) = xy` over `[-extent, extent]²`.
    SaddlePatch { extent: f64 },
    /// Cylinder of the given radius capped by hemispheres, axis along `z`,
    /// total tip-to-tip length `length`.
    Capsule { length: f64, radius: f64 },
}

/// A rectangle `[u0,u1] x [v0,v1]` in the parameter domain of one patch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRect {
    pub patch: usize,
    pub u: (f64, f64),
    pub v: (f64, f64),
}

impl AnalyticSurface {
    pub fn sphere(radius: f64) -> Result<Self, SurfaceError> {
        Self::Sphere { radius }.validated()
    }

    pub fn torus(major: f64, minor: f64) -> Result<Self, SurfaceError> {
        Self::Torus { major, minor }.validated()
    }

    pub fn saddle(extent: f64) -> Result<Self, SurfaceError> {
        Self::SaddlePatch { extent }.validated()
    }

    pub fn capsule(length: f64, radius: f64) -> Result<Self, SurfaceError> {
        Self::Capsule { length, radius }.validated()
    }

    pub fn validated(self) -> Result<Self, SurfaceError> {
        let ok = match self {
            Self::Sphere { radius } => radius > 0.0 && radius.is_finite(),
            Self::Torus { major, minor } => minor > 0.0 && major > minor && major.is_finite(),
            Self::SaddlePatch { extent } => extent > 0.0 && extent.is_finite(),
            Self::Capsule { length, radius } => radius > 0.0 && length > 2.0 * radius && length.is_finite(),
        };
        if ok {
            Ok(self)
        } else {
            Err(SurfaceError::InvalidParameters(format!("{self:?}")))
        }
    }

    fn cylinder_half(&self) -> f64 {
        match *self {
            Self::Capsule { length, radius } => 0.5 * length - radius,
            _ => 0.0,
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Self::Sphere { radius } => 4.0 * PI * radius * radius,
            Self::Torus { major, minor } => 4.0 * PI * PI * major * minor,
            Self::SaddlePatch { .. } => (0..self.patch_count())
                .map(|i| self.rect_area(&self.patch_domain(i)))
                .sum(),
            Self::Capsule { radius, .. } => {
                2.0 * PI * radius * 2.0 * self.cylinder_half() + 4.0 * PI * radius * radius
            }
        }
    }

    /// Upper bound for the diameter (exact except for the saddle, where the
    /// bounding-box diagonal is used).
    pub fn diameter_bound(&self) -> f64 {
        match *self {
            Self::Sphere { radius } => 2.0 * radius,
            Self::Torus { major, minor } => 2.0 * (major + minor),
            Self::SaddlePatch { extent: l } => (8.0 * l * l + 4.0 * l.powi(4)).sqrt(),
            Self::Capsule { length, .. } => length,
        }
    }

    pub fn has_interior(&self) -> bool {
        !matches!(self, Self::SaddlePatch { .. })
    }

    pub fn inside(&self, p: Point3) -> Result<bool, SurfaceError> {
        match *self {
            Self::Sphere { radius } => Ok(p.norm() < radius),
            Self::Torus { major, minor } => {
                let q = (p.x * p.x + p.y * p.y).sqrt() - major;
                Ok(q * q + p.z * p.z < minor * minor)
            }
            Self::SaddlePatch { .. } => Err(SurfaceError::NoInterior),
            Self::Capsule { radius, .. } => Ok(p.dist(self.axis_point(p)) < radius),
        }
    }

    fn axis_point(&self, p: Point3) -> Point3 {
        let h = self.cylinder_half();
        Vec3::new(0.0, 0.0, p.z.clamp(-h, h))
    }

    /// Inward unit normal at a surface point `p`. For the saddle patch, which
    /// bounds nothing, the normal with positive `z` component is returned.
    pub fn normal_at(&self, p: Point3) -> Vec3 {
        match *self {
            Self::Sphere { .. } => (-p).normalized(),
            Self::Torus { major, .. } => {
                let rho = (p.x * p.x + p.y * p.y).sqrt();
                let c = if rho > 0.0 {
                    Vec3::new(p.x, p.y, 0.0) * (major / rho)
                } else {
                    Vec3::new(major, 0.0, 0.0)
                };
                (c - p).normalized()
            }
            Self::SaddlePatch { .. } => Vec3::new(-p.y, -p.x, 1.0).normalized(),
            Self::Capsule { .. } => (self.axis_point(p) - p).normalized(),
        }
    }

    /// Nearest surface point to `p`.
    pub fn closest_point(&self, p: Point3) -> SurfacePoint {
        let position = match *self {
            Self::Sphere { radius } => {
                let n = p.norm();
                if n > 0.0 {
                    p * (radius / n)
                } else {
                    Vec3::Z * radius
                }
            }
            Self::Torus { major, minor } => {
                let rho = (p.x * p.x + p.y * p.y).sqrt();
                let c = if rho > 0.0 {
                    Vec3::new(p.x, p.y, 0.0) * (major / rho)
                } else {
                    Vec3::new(major, 0.0, 0.0)
                };
                let d = p - c;
                let d = if d.norm() > 0.0 { d } else { Vec3::Z };
                c + d.normalized() * minor
            }
            Self::SaddlePatch { extent } => saddle_closest(p, extent),
            Self::Capsule { radius, .. } => {
                let c = self.axis_point(p);
                let d = p - c;
                let d = if d.norm() > 0.0 { d } else { Vec3::X };
                c + d.normalized() * radius
            }
        };
        SurfacePoint { position, normal: self.normal_at(position) }
    }

    /// Intersections of the segment `[a, b]` with the surface, sorted along
    /// the segment.
    pub fn segment_hits(&self, a: Point3, b: Point3) -> Vec<Point3> {
        let d = b - a;
        let at = |t: f64| a + d * t;
        match *self {
            Self::Sphere { radius } => sphere_params(a, d, Vec3::ZERO, radius)
                .into_iter()
                .map(at)
                .collect(),
            Self::Torus { major, minor } => {
                // (|p|² + R² - r²)² - 4R²(x² + y²) along p = a + t d
                let (aa, ad, dd) = (a.norm2(), a.dot(d), d.norm2());
                let k = major * major - minor * minor;
                let q = [aa + k, 2.0 * ad, dd];
                let sq = [
                    q[0] * q[0],
                    2.0 * q[0] * q[1],
                    q[1] * q[1] + 2.0 * q[0] * q[2],
                    2.0 * q[1] * q[2],
                    q[2] * q[2],
                ];
                let m = 4.0 * major * major;
                let c = [
                    sq[0] - m * (a.x * a.x + a.y * a.y),
                    sq[1] - m * 2.0 * (a.x * d.x + a.y * d.y),
                    sq[2] - m * (d.x * d.x + d.y * d.y),
                    sq[3],
                    sq[4],
                ];
                poly::roots_in(&c, 0.0, 1.0).into_iter().map(at).collect()
            }
            Self::SaddlePatch { extent } => {
                // z(t) - x(t) y(t)
                let c = [
                    a.z - a.x * a.y,
                    d.z - a.x * d.y - d.x * a.y,
                    -d.x * d.y,
                ];
                poly::roots_in(&c, 0.0, 1.0)
                    .into_iter()
                    .map(at)
                    .filter(|p| p.x.abs() <= extent && p.y.abs() <= extent)
                    .collect()
            }
            Self::Capsule { radius, .. } => {
                let h = self.cylinder_half();
                let mut ts: Vec<f64> = Vec::new();
                let (qa, qb, qc) = (
                    d.x * d.x + d.y * d.y,
                    2.0 * (a.x * d.x + a.y * d.y),
                    a.x * a.x + a.y * a.y - radius * radius,
                );
                for t in quadratic_roots(qa, qb, qc) {
                    let z = a.z + t * d.z;
                    if (0.0..=1.0).contains(&t) && z.abs() <= h {
                        ts.push(t);
                    }
                }
                for (centre, sign) in [(Vec3::new(0.0, 0.0, h), 1.0), (Vec3::new(0.0, 0.0, -h), -1.0)] {
                    for t in sphere_params(a, d, centre, radius) {
                        let z = a.z + t * d.z;
                        if sign * (z - centre.z) > 0.0 {
                            ts.push(t);
                        }
                    }
                }
                ts.sort_by(f64::total_cmp);
                ts.dedup_by(|x, y| (*x - *y).abs() <= 1e-14);
                ts.into_iter().map(at).collect()
            }
        }
    }

    pub(crate) fn patch_count(&self) -> usize {
        match self {
            Self::Capsule { .. } => 3,
            _ => 1,
        }
    }

    pub(crate) fn patch_domain(&self, patch: usize) -> ParamRect {
        let (u, v) = match *self {
            Self::Sphere { radius } => ((-radius, radius), (0.0, TAU)),
            Self::Torus { .. } => ((0.0, TAU), (0.0, TAU)),
            Self::SaddlePatch { extent } => ((-extent, extent), (-extent, extent)),
            Self::Capsule { radius, .. } => {
                let h = self.cylinder_half();
                match patch {
                    0 => ((-h, h), (0.0, TAU)),
                    1 => ((h, h + radius), (0.0, TAU)),
                    _ => ((-h - radius, -h), (0.0, TAU)),
                }
            }
        };
        ParamRect { patch, u, v }
    }

    /// Coarse starting grid (per axis) for cell refinement.
    pub(crate) fn base_grid(&self) -> (usize, usize) {
        match self {
            Self::Sphere { .. } => (8, 16),
            Self::Torus { .. } => (16, 32),
            Self::SaddlePatch { .. } => (16, 16),
            Self::Capsule { length, radius } => (((length / radius) as usize).clamp(4, 64), 16),
        }
    }

    pub(crate) fn param_point(&self, patch: usize, u: f64, v: f64) -> Point3 {
        match *self {
            Self::Sphere { radius } => {
                let s = (radius * radius - u * u).max(0.0).sqrt();
                Vec3::new(s * v.cos(), s * v.sin(), u)
            }
            Self::Torus { major, minor } => {
                let w = major + minor * u.cos();
                Vec3::new(w * v.cos(), w * v.sin(), minor * u.sin())
            }
            Self::SaddlePatch { .. } => Vec3::new(u, v, u * v),
            Self::Capsule { radius, .. } => {
                let h = self.cylinder_half();
                let s = match patch {
                    0 => radius,
                    1 => (radius * radius - (u - h).powi(2)).max(0.0).sqrt(),
                    _ => (radius * radius - (u + h).powi(2)).max(0.0).sqrt(),
                };
                Vec3::new(s * v.cos(), s * v.sin(), u)
            }
        }
    }

    /// Area element `|∂u X × ∂v X|`.
    pub(crate) fn jacobian(&self, _patch: usize, u: f64, v: f64) -> f64 {
        match *self {
            Self::Sphere { radius } => radius,
            Self::Torus { major, minor } => minor * (major + minor * u.cos()),
            Self::SaddlePatch { .. } => (1.0 + u * u + v * v).sqrt(),
            Self::Capsule { radius, .. } => radius,
        }
    }

    pub(crate) fn jacobian_max(&self, _patch: usize) -> f64 {
        match *self {
            Self::Sphere { radius } => radius,
            Self::Torus { major, minor } => minor * (major + minor),
            Self::SaddlePatch { extent } => (1.0 + 2.0 * extent * extent).sqrt(),
            Self::Capsule { radius, .. } => radius,
        }
    }

    /// Exact area of a parameter rectangle (Gauss–Legendre for the saddle).
    pub(crate) fn rect_area(&self, r: &ParamRect) -> f64 {
        let (du, dv) = (r.u.1 - r.u.0, r.v.1 - r.v.0);
        match *self {
            Self::Torus { major, minor } => {
                minor * dv * (major * du + minor * (r.u.1.sin() - r.u.0.sin()))
            }
            Self::SaddlePatch { .. } => {
                // 4-point Gauss–Legendre per axis, split in 4x4 sub-rectangles
                const X: [f64; 4] = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
                const W: [f64; 4] = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
                let n = 4;
                let (hu, hv) = (du / n as f64, dv / n as f64);
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        let (cu, cv) = (r.u.0 + (i as f64 + 0.5) * hu, r.v.0 + (j as f64 + 0.5) * hv);
                        for a in 0..4 {
                            for b in 0..4 {
                                let (u, v) = (cu + 0.5 * hu * X[a], cv + 0.5 * hv * X[b]);
                                s += W[a] * W[b] * (1.0 + u * u + v * v).sqrt();
                            }
                        }
                    }
                }
                s * 0.25 * hu * hv
            }
            _ => self.jacobian(r.patch, 0.0, 0.0) * du * dv,
        }
    }

    /// Uniform area sample inside a parameter rectangle.
    pub(crate) fn sample_rect<R: Rng + ?Sized>(&self, r: &ParamRect, rng: &mut R) -> SurfacePoint {
        let jmax = self.jacobian_max(r.patch);
        loop {
            let u = r.u.0 + (r.u.1 - r.u.0) * rng.random::<f64>();
            let v = r.v.0 + (r.v.1 - r.v.0) * rng.random::<f64>();
            if rng.random::<f64>() * jmax <= self.jacobian(r.patch, u, v) {
                let position = self.param_point(r.patch, u, v);
                return SurfacePoint { position, normal: self.normal_at(position) };
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SurfacePoint {
        let n = self.patch_count();
        let patch = if n == 1 {
            0
        } else {
            let areas: Vec<f64> = (0..n).map(|i| self.rect_area(&self.patch_domain(i))).collect();
            let total: f64 = areas.iter().sum();
            let mut x = rng.random::<f64>() * total;
            let mut k = 0;
            while k + 1 < n && x >= areas[k] {
                x -= areas[k];
                k += 1;
            }
            k
        };
        self.sample_rect(&self.patch_domain(patch), rng)
    }
}

/// Roots of `a t² + b t + c` using the cancellation-free formulation.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b != 0.0 { vec![-c / b] } else { Vec::new() };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut r = if q != 0.0 { vec![q / a, c / q] } else { vec![0.0] };
    r.sort_by(f64::total_cmp);
    r
}

/// Segment parameters in `[0,1]` where `a + t d` meets the sphere.
fn sphere_params(a: Point3, d: Vec3, centre: Point3, radius: f64) -> Vec<f64> {
    let o = a - centre;
    quadratic_roots(d.norm2(), 2.0 * o.dot(d), o.norm2() - radius * radius)
        .into_iter()
        .filter(|t| (0.0..=1.0).contains(t))
        .collect()
}

fn saddle_closest(p: Point3, extent: f64) -> Point3 {
    // Newton on the squared distance to (u, v, uv), clamped to the patch.
    let (mut u, mut v) = (p.x.clamp(-extent, extent), p.y.clamp(-extent, extent));
    for _ in 0..50 {
        let r = Vec3::new(u - p.x, v - p.y, u * v - p.z);
        let gu = r.x + r.z * v;
        let gv = r.y + r.z * u;
        let huu = 1.0 + v * v;
        let hvv = 1.0 + u * u;
        let huv = u * v + r.z;
        let det = huu * hvv - huv * huv;
        let (su, sv) = if det > 1e-12 {
            ((hvv * gu - huv * gv) / det, (huu * gv - huv * gu) / det)
        } else {
            (0.5 * gu, 0.5 * gv)
        };
        let (nu, nv) = ((u - su).clamp(-extent, extent), (v - sv).clamp(-extent, extent));
        let step = (nu - u).abs() + (nv - v).abs();
        u = nu;
        v = nv;
        if step < 1e-15 {
            break;
        }
    }
    Vec3::new(u, v, u * v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn areas() {
        assert_relative_eq!(AnalyticSurface::sphere(2.0).unwrap().area(), 16.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(AnalyticSurface::torus(2.0, 1.0).unwrap().area(), 8.0 * PI * PI, max_relative = 1e-15);
        let cap = AnalyticSurface::capsule(10.0, 0.2).unwrap();
        assert_relative_eq!(cap.area(), 2.0 * PI * 0.2 * 9.6 + 4.0 * PI * 0.04, max_relative = 1e-14);
        // area of z = xy over [-1,1]² by fine midpoint rule
        let n = 2000;
        let h = 2.0 / n as f64;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                let (x, y) = (-1.0 + (i as f64 + 0.5) * h, -1.0 + (j as f64 + 0.5) * h);
                s += (1.0 + x * x + y * y).sqrt();
            }
        }
        assert_relative_eq!(AnalyticSurface::saddle(1.0).unwrap().area(), s * h * h, max_relative = 1e-6);
    }

    #[test]
    fn torus_rect_area_sums_to_total() {
        let t = AnalyticSurface::torus(2.0, 1.0).unwrap();
        let mut s = 0.0;
        for i in 0..7 {
            let r = ParamRect { patch: 0, u: (TAU * i as f64 / 7.0, TAU * (i + 1) as f64 / 7.0), v: (0.0, TAU) };
            s += t.rect_area(&r);
        }
        assert_relative_eq!(s, t.area(), max_relative = 1e-13);
    }

    #[test]
    fn sphere_hits() {
        let s = AnalyticSurface::sphere(1.0).unwrap();
        let h = s.segment_hits(Vec3::new(0.0, 0.0, -2.0), Vec3::new(0.0, 0.0, 2.0));
        assert_eq!(h.len(), 2);
        assert!((h[0] - Vec3::new(0.0, 0.0, -1.0)).norm() < 1e-15);
        assert!((h[1] - Vec3::Z).norm() < 1e-15);
        assert!(s.segment_hits(Vec3::new(-0.3, 0.1, 0.0), Vec3::new(0.4, 0.2, 0.1)).is_empty());
    }

    #[test]
    fn torus_hits_on_axis_line() {
        let t = AnalyticSurface::torus(2.0, 1.0).unwrap();
        let h = t.segment_hits(Vec3::new(-4.0, 0.0, 0.0), Vec3::new(4.0, 0.0, 0.0));
        let xs: Vec<f64> = h.iter().map(|p| p.x).collect();
        assert_eq!(xs.len(), 4);
        for (a, b) in xs.iter().zip([-3.0, -1.0, 1.0, 3.0]) {
            assert!((a - b).abs() < 1e-9, "{xs:?}");
        }
    }

    #[test]
    fn capsule_hits_and_inside() {
        let c = AnalyticSurface::capsule(10.0, 0.2).unwrap();
        let h = c.segment_hits(Vec3::new(0.0, 0.0, -6.0), Vec3::new(0.0, 0.0, 6.0));
        assert_eq!(h.len(), 2);
        assert!((h[0].z + 5.0).abs() < 1e-12 && (h[1].z - 5.0).abs() < 1e-12);
        let h = c.segment_hits(Vec3::new(-1.0, 0.0, 1.0), Vec3::new(1.0, 0.0, 1.0));
        assert_eq!(h.len(), 2);
        assert!((h[0].x + 0.2).abs() < 1e-12);
        assert!(c.inside(Vec3::new(0.0, 0.1, 4.9)).unwrap());
        assert!(!c.inside(Vec3::new(0.0, 0.1, 5.0)).unwrap());
    }

    #[test]
    fn saddle_hits_and_interior() {
        let s = AnalyticSurface::saddle(1.0).unwrap();
        let h = s.segment_hits(Vec3::new(0.5, 0.5, -1.0), Vec3::new(0.5, 0.5, 1.0));
        assert_eq!(h.len(), 1);
        assert!((h[0].z - 0.25).abs() < 1e-14);
        assert!(matches!(s.inside(Vec3::ZERO), Err(SurfaceError::NoInterior)));
    }

    #[test]
    fn samples_lie_on_surface_with_unit_normals() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for s in [
            AnalyticSurface::sphere(1.5).unwrap(),
            AnalyticSurface::torus(2.0, 0.5).unwrap(),
            AnalyticSurface::saddle(0.7).unwrap(),
            AnalyticSurface::capsule(3.0, 0.4).unwrap(),
        ] {
            for _ in 0..2000 {
                let p = s.sample(&mut rng);
                assert!((p.normal.norm() - 1.0).abs() < 1e-12);
                let q = s.closest_point(p.position);
                assert!(q.position.dist(p.position) < 1e-9, "{s:?} {p:?} {q:?}");
            }
        }
    }

    #[test]
    fn inward_normals_point_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for s in [
            AnalyticSurface::sphere(1.0).unwrap(),
            AnalyticSurface::torus(2.0, 1.0).unwrap(),
            AnalyticSurface::capsule(3.0, 0.4).unwrap(),
        ] {
            for _ in 0..500 {
                let p = s.sample(&mut rng);
                assert!(s.inside(p.position + p.normal * 1e-6).unwrap());
                assert!(!s.inside(p.position - p.normal * 1e-6).unwrap());
            }
        }
    }
}
