//! Cone-growing search for a voluminous tetrahedron with one vertex at a
//! given surface point, together with its stopping distance and the plane
//! onto which the nearby surface projects with large image.
//!
//! All distances are measured from the seed `x0`. A "double cone" around an
//! axis `a` is the set of directions within `phi0` of `a` or `-a`.

use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{fibonacci_cap, voluminous_eta, Point3, Tetra, Vec3};
use crate::rng::{self, domain};
use crate::surface::{SurfaceOracle, SurfacePoint};

/// Rotation grid used to scan the tilted caps.
const ROTATION_STEPS: usize = 64;
/// Points on each probe circle when picking the last vertex.
const RIM_PROBES: usize = 64;
/// Radii of the probe circles, relative to `ρ sin φ0`.
const PROBE_RADII: [f64; 5] = [1.0, 0.875, 0.75, 0.625, 0.5];
/// Most candidates kept for the second vertex.
const MAX_SECOND: usize = 16;
/// Relative tolerance for hits in the projection check.
const PROJECTION_TOL: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GoodTetraError {
    #[error("surface has no interior")]
    NoInterior,
    #[error("iteration limit {0} exceeded")]
    MaxIterations(u32),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no surface point found in the growing cone")]
    NoHit,
    #[error("no admissible remaining vertex found at radius {0}")]
    NoVertex(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GoodTetraParams {
    pub phi0: f64,
    pub hit_tolerance: f64,
    pub ray_count: usize,
    pub bisection_tol: f64,
    pub max_iterations: u32,
}

impl Default for GoodTetraParams {
    fn default() -> Self {
        GoodTetraParams { phi0: PI / 4.0, hit_tolerance: 1e-3, ray_count: 4096, bisection_tol: 1e-6, max_iterations: 64 }
    }
}

impl GoodTetraParams {
    pub fn validate(&self) -> Result<(), GoodTetraError> {
        if !(self.phi0 > 0.0 && self.phi0 <= PI / 4.0 + 1e-15) {
            return Err(GoodTetraError::InvalidParams(format!("phi0 = {} not in (0, π/4]", self.phi0)));
        }
        if !(self.hit_tolerance > 0.0 && self.bisection_tol > 0.0) {
            return Err(GoodTetraError::InvalidParams("tolerances must be positive".into()));
        }
        if self.ray_count < 64 {
            return Err(GoodTetraError::InvalidParams(format!("ray_count = {} below 64", self.ray_count)));
        }
        if self.max_iterations == 0 {
            return Err(GoodTetraError::InvalidParams("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseLabel {
    #[serde(rename = "central_hit_a")]
    CentralHitA,
    #[serde(rename = "central_hit_b")]
    CentralHitB,
    #[serde(rename = "wide_pair")]
    WidePair,
    #[serde(rename = "antipodal_3a")]
    Antipodal3a,
    #[serde(rename = "antipodal_3b")]
    Antipodal3b,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodTetraResult {
    /// `x0` first.
    pub vertices: Tetra,
    pub stopping_distance: f64,
    pub case_label: CaseLabel,
    pub eta_achieved: f64,
    pub iterations: u32,
    pub witness_plane_normal: Vec3,
    /// First-hit radius of every step, ascending.
    pub radii: Vec<f64>,
    /// Probe segments of the last step that missed the surface.
    pub missed_segments: usize,
}

/// How the hits on the current roof are arranged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoofClass {
    /// Index of the most central hit.
    Central(usize),
    /// Indices of the most separated pair.
    Wide(usize, usize),
    /// Index of the hit used as `x1`.
    Antipodal(usize),
}

/// Classifies roof hits (offsets from `x0`) against the axis `v`.
pub fn classify_roof(hits: &[Vec3], v: Vec3, phi0: f64, angular_slack: f64) -> Option<RoofClass> {
    if hits.is_empty() {
        return None;
    }
    let centrality = |y: &Vec3| y.dot(v).abs() / y.norm();
    let mut most = 0;
    for (i, y) in hits.iter().enumerate() {
        if centrality(y) > centrality(&hits[most]) {
            most = i;
        }
    }
    if centrality(&hits[most]).min(1.0).acos() <= 0.75 * phi0 + angular_slack {
        return Some(RoofClass::Central(most));
    }
    let dirs: Vec<Vec3> = hits
        .iter()
        .map(|y| {
            let p = y.reject(v);
            if y.dot(v) < 0.0 { -p } else { p }
        })
        .collect();
    let mut best = (0, 0, -1.0);
    for i in 0..dirs.len() {
        for j in (i + 1)..dirs.len() {
            let a = dirs[i].angle(dirs[j]);
            if a > best.2 {
                best = (i, j, a);
            }
        }
    }
    if best.2 >= PI / 3.0 {
        Some(RoofClass::Wide(best.0, best.1))
    } else {
        Some(RoofClass::Antipodal(most))
    }
}

struct Search<'a> {
    oracle: &'a SurfaceOracle,
    x0: Point3,
    p: GoodTetraParams,
    reach: f64,
}

struct Roof {
    rho: f64,
    hits: Vec<Vec3>,
}

impl Search<'_> {
    fn cone_dirs(&self, axis: Vec3) -> Vec<Vec3> {
        let half = self.p.ray_count / 2;
        let rim = half / 8;
        let (c, s) = (self.p.phi0.cos(), self.p.phi0.sin());
        let mut out = Vec::with_capacity(2 * half);
        for a in [axis, -axis] {
            let e1 = a.any_orthonormal();
            let e2 = a.cross(e1);
            out.extend((0..rim).map(|k| {
                let t = 2.0 * PI * k as f64 / rim as f64;
                a * c + (e1 * t.cos() + e2 * t.sin()) * s
            }));
            out.extend(fibonacci_cap(a, c, half - rim));
        }
        out
    }

    fn in_cone(&self, y: Vec3, axis: Vec3, slack: f64) -> bool {
        y.dot(axis).abs() >= y.norm() * (self.p.phi0 + slack).min(PI / 2.0).cos()
    }

    /// Distance to the first surface point along `d` in `(from, to]`.
    fn first_hit(&self, d: Vec3, from: f64, to: f64) -> Option<f64> {
        self.oracle
            .segment_hits(self.x0 + d * from, self.x0 + d * to)
            .first()
            .map(|h| h.dist(self.x0))
    }

    fn all_hits(&self, d: Vec3, from: f64, to: f64) -> Vec<Vec3> {
        self.oracle
            .segment_hits(self.x0 + d * from, self.x0 + d * to)
            .into_iter()
            .map(|h| h - self.x0)
            .collect()
    }

    /// Moves `d` into the closed double cone around `axis`.
    fn clamp_to_cone(&self, d: Vec3, axis: Vec3) -> Vec3 {
        let a = if d.dot(axis) >= 0.0 { axis } else { -axis };
        if d.angle(a) <= self.p.phi0 {
            return d;
        }
        let perp = d.reject(a);
        if perp.norm() == 0.0 {
            return a;
        }
        a * self.p.phi0.cos() + perp.normalized() * self.p.phi0.sin()
    }

    /// Smallest radius `t > from` at which the surface meets the double cone
    /// around `axis`, with the roof hits at that radius.
    fn grow(&self, axis: Vec3, from: f64) -> Result<Roof, GoodTetraError> {
        let dirs = self.cone_dirs(axis);
        let ts: Vec<Option<f64>> = dirs.par_iter().map(|&d| self.first_hit(d, from, self.reach)).collect();
        let (k, t) = ts
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t.map(|t| (i, t)))
            .fold(None, |acc: Option<(usize, f64)>, (i, t)| match acc {
                Some((_, b)) if b <= t => acc,
                _ => Some((i, t)),
            })
            .ok_or(GoodTetraError::NoHit)?;
        // compass refinement of the best direction inside the cone
        let mut best = (dirs[k], t);
        let mut step = (4.0 * PI / dirs.len() as f64).sqrt();
        while step > self.p.bisection_tol {
            let e1 = best.0.any_orthonormal();
            let e2 = best.0.cross(e1);
            let mut moved = false;
            for ax in [e1, -e1, e2, -e2] {
                let cand = self.clamp_to_cone(best.0.rotate(ax, step), axis);
                if let Some(tc) = self.first_hit(cand, from, self.reach) {
                    if tc < best.1 {
                        best = (cand, tc);
                        moved = true;
                        break;
                    }
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        let rho = best.1;
        let limit = rho * (1.0 + self.p.hit_tolerance);
        let mut hits: Vec<Vec3> = dirs
            .iter()
            .zip(&ts)
            .filter_map(|(&d, t)| t.filter(|&t| t <= limit).map(|t| d * t))
            .collect();
        hits.insert(0, best.0 * rho);
        Ok(Roof { rho, hits })
    }

    /// New surface points in the cap of the double cone around `axis`,
    /// radial range `[rho/2, rho]`, lying outside the double cone around `v`.
    fn new_points(&self, axis: Vec3, v: Vec3, rho: f64) -> Vec<Vec3> {
        let slack = self.p.hit_tolerance;
        let dirs: Vec<Vec3> = self.cone_dirs(axis).into_iter().filter(|&d| !self.in_cone(d, v, slack)).collect();
        let found: Vec<Vec<Vec3>> = dirs
            .par_iter()
            .map(|&d| {
                self.all_hits(d, rho / 2.0, rho)
                    .into_iter()
                    .filter(|&y| !self.in_cone(y, v, slack))
                    .collect()
            })
            .collect();
        found.into_iter().flatten().collect()
    }

    /// Surface points in the double cone around `axis` with radius in
    /// `(rho, 2 rho]`.
    fn forward_points(&self, axis: Vec3, rho: f64) -> Vec<Vec3> {
        let from = rho * (1.0 + self.p.hit_tolerance);
        let found: Vec<Option<Vec3>> = self
            .cone_dirs(axis)
            .par_iter()
            .map(|&d| self.first_hit(d, from, 2.0 * rho).map(|t| d * t))
            .collect();
        found.into_iter().flatten().collect()
    }

    /// Surface points on the probe segment through `z ∈ H` parallel to `v`
    /// with half-length `|z| cot φ0`.
    fn probe(&self, z: Vec3, v: Vec3) -> Vec<Vec3> {
        let h = z.norm() / self.p.phi0.tan();
        self.oracle
            .segment_hits(self.x0 + z - v * h, self.x0 + z + v * h)
            .into_iter()
            .map(|p| p - self.x0)
            .collect()
    }

    /// Best last vertex over probe segments on circles in `H = v^⊥`.
    fn pick_last(&self, x1: Vec3, x2: Vec3, v: Vec3, rho: f64) -> (Option<(f64, Vec3)>, usize) {
        let r = rho * self.p.phi0.sin();
        let e1 = v.any_orthonormal();
        let e2 = v.cross(e1);
        let zs: Vec<Vec3> = PROBE_RADII
            .iter()
            .flat_map(|&k| {
                (0..RIM_PROBES).map(move |i| {
                    let a = 2.0 * PI * i as f64 / RIM_PROBES as f64;
                    (e1 * a.cos() + e2 * a.sin()) * (k * r)
                })
            })
            .collect();
        let probes: Vec<Vec<Vec3>> = zs.par_iter().map(|&z| self.probe(z, v)).collect();
        let missed = probes.iter().filter(|p| p.is_empty()).count();
        let mut best: Option<(f64, Vec3)> = None;
        for y in probes.into_iter().flatten() {
            let t = Tetra([Vec3::ZERO, x1, x2, y]);
            if let Some(eta) = voluminous_eta(&t, rho) {
                if best.is_none_or(|b| eta > b.0) {
                    best = Some((eta, y));
                }
            }
        }
        (best, missed)
    }

    /// Completes `(x0, x1, x2, ·)` for each second-vertex candidate and keeps
    /// the best.
    fn complete(&self, x1: Vec3, seconds: &[Vec3], v: Vec3, rho: f64) -> Option<(f64, [Vec3; 3], usize)> {
        let mut best: Option<(f64, [Vec3; 3], usize)> = None;
        for &x2 in thin(seconds, MAX_SECOND).iter() {
            if let (Some((eta, x3)), missed) = self.pick_last(x1, x2, v, rho) {
                if best.as_ref().is_none_or(|b| eta > b.0) {
                    best = Some((eta, [x1, x2, x3], missed));
                }
            }
        }
        best
    }
}

/// At most `k` items spread evenly over `xs`, order kept.
fn thin(xs: &[Vec3], k: usize) -> Vec<Vec3> {
    if xs.len() <= k {
        return xs.to_vec();
    }
    (0..k).map(|i| xs[i * xs.len() / k]).collect()
}

/// Runs the cone-growing search from `x0` (normal pointing into the domain).
pub fn find_good_tetra(
    oracle: &SurfaceOracle,
    x0: SurfacePoint,
    params: &GoodTetraParams,
) -> Result<GoodTetraResult, GoodTetraError> {
    params.validate()?;
    if !oracle.has_interior() {
        return Err(GoodTetraError::NoInterior);
    }
    let diam = oracle.diameter_bound();
    let s = Search { oracle, x0: x0.position, p: *params, reach: 1.01 * diam };
    let mut v = x0.normal.normalized();
    let probe = x0.position + v * (1e-4 * diam);
    if !oracle.inside(probe).map_err(|_| GoodTetraError::NoInterior)? {
        v = -v;
    }
    let slack = params.hit_tolerance;
    let mut roof = s.grow(v, 1e-7 * diam)?;
    let mut radii = vec![roof.rho];
    let mut iterations = 1;
    loop {
        let rho = roof.rho;
        let r = rho * params.phi0.sin();
        let (label, found) = match classify_roof(&roof.hits, v, params.phi0, slack).ok_or(GoodTetraError::NoHit)? {
            RoofClass::Central(i) => {
                let x1 = roof.hits[i];
                let off_axis = x1.reject(v);
                let label = if off_axis.norm() <= slack * rho { CaseLabel::CentralHitA } else { CaseLabel::CentralHitB };
                let u = if off_axis.norm() > 0.0 { off_axis.normalized() } else { v.any_orthonormal() };
                let e2 = v.cross(u);
                let seconds: Vec<Vec3> = PROBE_RADII
                    .iter()
                    .flat_map(|&k| [e2 * (-k * r), e2 * (k * r)])
                    .flat_map(|z| s.probe(z, v))
                    .collect();
                (label, s.complete(x1, &seconds, v, rho))
            }
            RoofClass::Wide(i, j) => (CaseLabel::WidePair, s.complete(roof.hits[i], &[roof.hits[j]], v, rho)),
            RoofClass::Antipodal(i) => {
                let x1 = roof.hits[i];
                let u = {
                    let p = x1.reject(v);
                    (if x1.dot(v) < 0.0 { -p } else { p }).normalized()
                };
                let w = u.cross(v);
                let tilt = |t: f64| v.rotate(w, t * params.phi0);
                let scan = (1..=ROTATION_STEPS).find_map(|k| {
                    let t = 0.5 * k as f64 / ROTATION_STEPS as f64;
                    let pts = s.new_points(tilt(t), v, rho);
                    (!pts.is_empty()).then_some((k, pts))
                });
                if let Some((k, mut pts)) = scan {
                    let (mut lo, mut hi) = (0.5 * (k - 1) as f64 / ROTATION_STEPS as f64, 0.5 * k as f64 / ROTATION_STEPS as f64);
                    while hi - lo > params.bisection_tol {
                        let mid = 0.5 * (lo + hi);
                        let found = s.new_points(tilt(mid), v, rho);
                        if found.is_empty() {
                            lo = mid;
                        } else {
                            hi = mid;
                            pts = found;
                        }
                    }
                    (CaseLabel::Antipodal3a, s.complete(x1, &pts, v, rho))
                } else {
                    let v_star = tilt(0.5);
                    let fwd = s.forward_points(v_star, rho);
                    if !fwd.is_empty() {
                        (CaseLabel::Antipodal3b, s.complete(x1, &fwd, v, rho))
                    } else {
                        iterations += 1;
                        if iterations > params.max_iterations {
                            return Err(GoodTetraError::MaxIterations(params.max_iterations));
                        }
                        v = v_star;
                        roof = s.grow(v, rho * (1.0 + params.hit_tolerance))?;
                        radii.push(roof.rho);
                        continue;
                    }
                }
            }
        };
        let (eta, [x1, x2, x3], missed) = found.ok_or(GoodTetraError::NoVertex(rho))?;
        let x0p = x0.position;
        return Ok(GoodTetraResult {
            vertices: Tetra([x0p, x0p + x1, x0p + x2, x0p + x3]),
            stopping_distance: rho,
            case_label: label,
            eta_achieved: eta,
            iterations,
            witness_plane_normal: v,
            radii,
            missed_segments: missed,
        });
    }
}

/// Fraction of points `w` of the disk `H ∩ B(x0, r/√2)` whose segment of
/// length `2r` through `w` perpendicular to `H` meets the surface inside
/// `B(x0, r)` (up to a small relative tolerance).
pub fn verify_projection(
    oracle: &SurfaceOracle,
    x0: Point3,
    r: f64,
    witness_plane_normal: Vec3,
    n_rays: usize,
    seed: u64,
) -> f64 {
    if n_rays == 0 || !(r > 0.0) {
        return 0.0;
    }
    let n = witness_plane_normal.normalized();
    let e1 = n.any_orthonormal();
    let e2 = n.cross(e1);
    let mut rng = rng::stream(seed, domain::PROJECTION, 0);
    let disks: Vec<Vec3> = (0..n_rays)
        .map(|_| {
            let rad = r / SQRT_2 * rng.random::<f64>().sqrt();
            let a = 2.0 * PI * rng.random::<f64>();
            x0 + (e1 * a.cos() + e2 * a.sin()) * rad
        })
        .collect();
    let good = disks
        .par_iter()
        .filter(|&&w| {
            oracle
                .segment_hits(w - n * r, w + n * r)
                .iter()
                .any(|h| h.dist(x0) <= r * (1.0 + PROJECTION_TOL))
        })
        .count();
    good as f64 / n_rays as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roof_classes() {
        let v = Vec3::Z;
        let phi0 = PI / 4.0;
        // nearly axial hit
        let c = classify_roof(&[Vec3::new(0.9, 0.0, 0.5), Vec3::new(0.1, 0.0, 1.0)], v, phi0, 0.0);
        assert_eq!(c, Some(RoofClass::Central(1)));
        // two rim hits a right angle apart
        let rim = |a: f64| Vec3::new(a.cos(), a.sin(), 1.0);
        let c = classify_roof(&[rim(0.0), rim(0.2), rim(PI / 2.0)], v, phi0, 0.0);
        assert_eq!(c, Some(RoofClass::Wide(0, 2)));
        // a lower-cone hit counts through its central projection
        let c = classify_roof(&[rim(0.0), -rim(0.1)], v, phi0, 0.0);
        assert_eq!(c, Some(RoofClass::Antipodal(0)));
        assert_eq!(classify_roof(&[], v, phi0, 0.0), None);
    }

    #[test]
    fn params_validation() {
        assert!(GoodTetraParams::default().validate().is_ok());
        let bad = GoodTetraParams { phi0: 1.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = GoodTetraParams { ray_count: 10, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn thinning_keeps_order() {
        let xs: Vec<Vec3> = (0..40).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
        let t = thin(&xs, 8);
        assert_eq!(t.len(), 8);
        assert!(t.windows(2).all(|w| w[0].x < w[1].x));
    }
}
