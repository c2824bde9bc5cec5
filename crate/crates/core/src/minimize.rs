//! Discrete Menger energy on mesh vertices and simulated-annealing searches
//! for energy-minimal shapes under an area cap, and area-minimal shapes under
//! an energy cap. Connectivity never changes; only vertex positions move.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{triangle_area, triangle_is_degenerate, Point3, Tetra};
use crate::integrand::menger;
use crate::rng::{self, domain, pairwise};
use crate::surface::{SurfaceError, TriMesh};

/// Vertex budget of the exhaustive quadrature.
pub const MAX_EXHAUSTIVE_VERTICES: usize = 64;
/// Relative tolerance of the constraint checks.
pub const CONSTRAINT_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MinimizeError {
    #[error("exhaustive quadrature needs at most {MAX_EXHAUSTIVE_VERTICES} vertices, mesh has {0}")]
    TooManyVertices(usize),
    #[error("supercritical exponent required (p > 8), got {0}")]
    Subcritical(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("infeasible start: energy {energy} exceeds cap {cap}")]
    InfeasibleStart { energy: f64, cap: f64 },
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Quadrature {
    AllVertexQuadruples,
    Sampled { n: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteEnergyConfig {
    pub p: f64,
    pub quadrature: Quadrature,
}

impl DiscreteEnergyConfig {
    pub fn exhaustive(p: f64) -> Self {
        DiscreteEnergyConfig { p, quadrature: Quadrature::AllVertexQuadruples }
    }

    fn validate(&self, vertices: usize) -> Result<(), MinimizeError> {
        if !(self.p > 8.0) || !self.p.is_finite() {
            return Err(MinimizeError::Subcritical(self.p));
        }
        match self.quadrature {
            Quadrature::AllVertexQuadruples if vertices > MAX_EXHAUSTIVE_VERTICES => {
                Err(MinimizeError::TooManyVertices(vertices))
            }
            Quadrature::Sampled { n, .. } if n == 0 => {
                Err(MinimizeError::InvalidParameter("sample count must be positive".into()))
            }
            _ => Ok(()),
        }
    }
}

/// One third of the area of every incident face.
pub fn lumped_weights(vertices: &[Point3], faces: &[[usize; 3]]) -> Vec<f64> {
    let mut w = vec![0.0; vertices.len()];
    for f in faces {
        let a = triangle_area(vertices[f[0]], vertices[f[1]], vertices[f[2]]) / 3.0;
        for &i in f {
            w[i] += a;
        }
    }
    w
}

fn surface_area(vertices: &[Point3], faces: &[[usize; 3]]) -> f64 {
    faces.iter().map(|f| triangle_area(vertices[f[0]], vertices[f[1]], vertices[f[2]])).sum()
}

/// Weighted sum of `menger^p` over ordered vertex quadruples; repeated
/// indices contribute nothing.
pub fn discrete_energy(mesh: &TriMesh, config: &DiscreteEnergyConfig) -> Result<f64, MinimizeError> {
    config.validate(mesh.vertices().len())?;
    Ok(energy_of(mesh.vertices(), mesh.faces(), config))
}

fn energy_of(vertices: &[Point3], faces: &[[usize; 3]], config: &DiscreteEnergyConfig) -> f64 {
    let w = lumped_weights(vertices, faces);
    let p = config.p;
    match config.quadrature {
        Quadrature::AllVertexQuadruples => {
            let n = vertices.len();
            let rows: Vec<f64> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut s = 0.0;
                    for j in i + 1..n {
                        for k in j + 1..n {
                            for l in k + 1..n {
                                let weight = w[i] * w[j] * w[k] * w[l];
                                if weight == 0.0 {
                                    continue;
                                }
                                let t = Tetra::new(vertices[i], vertices[j], vertices[k], vertices[l]);
                                s += weight * menger(&t).powf(p);
                            }
                        }
                    }
                    s
                })
                .collect();
            // each unordered quadruple stands for its 24 orderings
            24.0 * pairwise(&rows, &|a, b| a + b, 0.0)
        }
        Quadrature::Sampled { n, seed } => {
            let total: f64 = w.iter().sum();
            let mut cumulative = Vec::with_capacity(w.len());
            let mut acc = 0.0;
            for &x in &w {
                acc += x;
                cumulative.push(acc);
            }
            let pick = |rng: &mut rand_chacha::ChaCha8Rng| {
                let u = rng.random::<f64>() * total;
                cumulative.partition_point(|&c| c <= u).min(w.len() - 1)
            };
            let stats = rng::chunked_stats::<()>(n, seed, domain::DISCRETE, |rng| {
                let q = [pick(rng), pick(rng), pick(rng), pick(rng)];
                let distinct = (0..4).all(|a| (a + 1..4).all(|b| q[a] != q[b]));
                if !distinct {
                    return Ok(0.0);
                }
                let t = Tetra::new(vertices[q[0]], vertices[q[1]], vertices[q[2]], vertices[q[3]]);
                Ok(menger(&t).powf(p))
            })
            .expect("draw is infallible");
            total.powi(4) * stats.mean
        }
    }
}

/// Annealing schedule; the step and cooling rules are fixed, these are the
/// knobs around them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnealParams {
    pub initial_temperature: f64,
    /// Metropolis scale relative to the starting objective.
    pub accept_scale: f64,
    /// Temperature factor applied every [`COOLING_PERIOD`] iterations.
    pub cooling: f64,
    /// Step size as a fraction of the mean edge length at unit temperature.
    pub step_fraction: f64,
}

pub const COOLING_PERIOD: u64 = 100;

impl Default for AnnealParams {
    fn default() -> Self {
        AnnealParams { initial_temperature: 1.0, accept_scale: 1e-3, cooling: 0.999, step_fraction: 0.02 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub iteration: u64,
    /// Objective of the chain state after this iteration.
    pub objective: f64,
    pub constraint_value: f64,
    pub accepted: bool,
    pub best_objective: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizerState {
    /// Best accepted mesh, after the final projection.
    pub mesh: TriMesh,
    pub objective: f64,
    pub constraint_value: f64,
    pub temperature: f64,
    pub iteration: u64,
    pub best_objective: f64,
    pub initial_objective: f64,
    pub initial_constraint: f64,
    pub accepted_moves: u64,
    pub audit: Vec<AuditRow>,
    pub self_intersecting: bool,
}

struct Chain<'a> {
    faces: &'a [[usize; 3]],
    movable: Vec<usize>,
    params: AnnealParams,
    sigma0: f64,
    rng: rand_chacha::ChaCha8Rng,
}

impl Chain<'_> {
    /// Moves one vertex; `None` when a face would collapse.
    fn propose(&mut self, current: &[Point3], temperature: f64) -> Option<Vec<Point3>> {
        let v = self.movable[self.rng.random_range(0..self.movable.len())];
        let sigma = self.sigma0 * temperature;
        let mut step = [0.0; 3];
        for s in &mut step {
            *s = self.rng.sample::<f64, _>(StandardNormal) * sigma;
        }
        let mut next = current.to_vec();
        next[v] = next[v] + Point3::new(step[0], step[1], step[2]);
        let collapsed = self
            .faces
            .iter()
            .filter(|f| f.contains(&v))
            .any(|f| triangle_is_degenerate(next[f[0]], next[f[1]], next[f[2]]));
        (!collapsed).then_some(next)
    }

    fn metropolis(&mut self, delta: f64, temperature: f64, scale: f64) -> bool {
        let u: f64 = self.rng.random();
        delta <= 0.0 || u < (-delta / (self.params.accept_scale * temperature * scale)).exp()
    }
}

fn prepare<'a>(mesh: &'a TriMesh, params: &AnnealParams, seed: u64) -> Result<Chain<'a>, MinimizeError> {
    if !(params.initial_temperature > 0.0)
        || !(params.accept_scale > 0.0)
        || !(params.cooling > 0.0 && params.cooling <= 1.0)
        || !(params.step_fraction > 0.0)
    {
        return Err(MinimizeError::InvalidParameter(format!("{params:?}")));
    }
    let faces = mesh.faces();
    let mut movable: Vec<usize> = faces.iter().flatten().copied().collect();
    movable.sort_unstable();
    movable.dedup();
    Ok(Chain {
        faces,
        movable,
        params: *params,
        sigma0: params.step_fraction * mean_edge_length(mesh),
        rng: rng::stream(seed, domain::MINIMIZE, 0),
    })
}

pub fn mean_edge_length(mesh: &TriMesh) -> f64 {
    let v = mesh.vertices();
    let mut edges: Vec<(usize, usize)> = mesh
        .faces()
        .iter()
        .flat_map(|f| [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])])
        .map(|(a, b)| (a.min(b), a.max(b)))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    edges.iter().map(|&(a, b)| v[a].dist(v[b])).sum::<f64>() / edges.len() as f64
}

fn scale_about_centroid(vertices: &[Point3], factor: f64) -> Vec<Point3> {
    let c = vertices.iter().fold(Point3::ZERO, |a, &b| a + b) * (1.0 / vertices.len() as f64);
    vertices.iter().map(|&x| c + (x - c) * factor).collect()
}

/// Scales so the area hits `target` to within the constraint tolerance;
/// floating error in `sqrt` is corrected by a second pass if needed.
fn project_area(vertices: Vec<Point3>, faces: &[[usize; 3]], target: f64) -> (Vec<Point3>, f64) {
    let mut v = vertices;
    for _ in 0..3 {
        let a = surface_area(&v, faces);
        if ((a - target) / target).abs() <= 0.25 * CONSTRAINT_TOL {
            return (v, a);
        }
        v = scale_about_centroid(&v, (target / a).sqrt());
    }
    let a = surface_area(&v, faces);
    (v, a)
}

/// Anneals the discrete energy with area kept at or below
/// `min(initial area, area_cap)`. A start above the cap is scaled down
/// first; the returned best mesh is scaled back up to that bound.
pub fn minimize_energy_area_cap(
    mesh: &TriMesh,
    config: &DiscreteEnergyConfig,
    area_cap: f64,
    iters: u64,
    seed: u64,
    params: &AnnealParams,
) -> Result<OptimizerState, MinimizeError> {
    config.validate(mesh.vertices().len())?;
    if !(area_cap > 0.0) || !area_cap.is_finite() {
        return Err(MinimizeError::InvalidParameter(format!("area cap {area_cap}")));
    }
    let mut chain = prepare(mesh, params, seed)?;
    let faces = mesh.faces();
    let cap = mesh.total_area().min(area_cap);
    let (mut current, mut area) = if mesh.total_area() > cap {
        project_area(mesh.vertices().to_vec(), faces, cap)
    } else {
        (mesh.vertices().to_vec(), surface_area(mesh.vertices(), faces))
    };
    let initial_objective = energy_of(&current, faces, config);
    let initial_constraint = area;
    let mut energy = initial_objective;
    let mut best = (current.clone(), energy);
    let mut temperature = params.initial_temperature;
    let mut audit = Vec::with_capacity(iters as usize);
    let mut accepted_moves = 0;
    for it in 1..=iters {
        let mut accepted = false;
        if let Some(mut next) = chain.propose(&current, temperature) {
            let mut next_area = surface_area(&next, faces);
            if next_area > cap {
                (next, next_area) = project_area(next, faces, cap);
            }
            if next_area <= cap * (1.0 + CONSTRAINT_TOL) {
                let next_energy = energy_of(&next, faces, config);
                if next_energy.is_finite() && chain.metropolis(next_energy - energy, temperature, initial_objective.abs()) {
                    (current, area, energy) = (next, next_area, next_energy);
                    accepted = true;
                    accepted_moves += 1;
                    if energy < best.1 {
                        best = (current.clone(), energy);
                    }
                }
            }
        }
        audit.push(AuditRow { iteration: it, objective: energy, constraint_value: area, accepted, best_objective: best.1 });
        if it % COOLING_PERIOD == 0 {
            temperature *= params.cooling;
        }
    }
    let (final_vertices, final_area) = project_area(best.0, faces, cap);
    let final_energy = energy_of(&final_vertices, faces, config);
    let best_objective = final_energy.min(best.1);
    let final_mesh = TriMesh::new(final_vertices, faces.to_vec())?;
    Ok(OptimizerState {
        self_intersecting: self_intersects(&final_mesh),
        mesh: final_mesh,
        objective: final_energy,
        constraint_value: final_area,
        temperature,
        iteration: iters,
        best_objective,
        initial_objective,
        initial_constraint,
        accepted_moves,
        audit,
    })
}

/// Anneals the surface area, rejecting every state whose discrete energy
/// exceeds `energy_cap`.
pub fn minimize_area_energy_cap(
    mesh: &TriMesh,
    config: &DiscreteEnergyConfig,
    energy_cap: f64,
    iters: u64,
    seed: u64,
    params: &AnnealParams,
) -> Result<OptimizerState, MinimizeError> {
    config.validate(mesh.vertices().len())?;
    if !(energy_cap > 0.0) || !energy_cap.is_finite() {
        return Err(MinimizeError::InvalidParameter(format!("energy cap {energy_cap}")));
    }
    let mut chain = prepare(mesh, params, seed)?;
    let faces = mesh.faces();
    let mut current = mesh.vertices().to_vec();
    let mut energy = energy_of(&current, faces, config);
    if energy > energy_cap {
        return Err(MinimizeError::InfeasibleStart { energy, cap: energy_cap });
    }
    let initial_constraint = energy;
    let mut area = surface_area(&current, faces);
    let initial_objective = area;
    let mut best = (current.clone(), area, energy);
    let mut temperature = params.initial_temperature;
    let mut audit = Vec::with_capacity(iters as usize);
    let mut accepted_moves = 0;
    for it in 1..=iters {
        let mut accepted = false;
        if let Some(next) = chain.propose(&current, temperature) {
            let next_area = surface_area(&next, faces);
            // only evaluate the energy for moves the Metropolis rule takes
            if chain.metropolis(next_area - area, temperature, initial_objective) {
                let next_energy = energy_of(&next, faces, config);
                if next_energy <= energy_cap {
                    (current, area, energy) = (next, next_area, next_energy);
                    accepted = true;
                    accepted_moves += 1;
                    if area < best.1 {
                        best = (current.clone(), area, energy);
                    }
                }
            }
        }
        audit.push(AuditRow { iteration: it, objective: area, constraint_value: energy, accepted, best_objective: best.1 });
        if it % COOLING_PERIOD == 0 {
            temperature *= params.cooling;
        }
    }
    let final_mesh = TriMesh::new(best.0, faces.to_vec())?;
    Ok(OptimizerState {
        self_intersecting: self_intersects(&final_mesh),
        objective: best.1,
        constraint_value: best.2,
        best_objective: best.1,
        mesh: final_mesh,
        temperature,
        iteration: iters,
        initial_objective,
        initial_constraint,
        accepted_moves,
        audit,
    })
}

/// True when two faces without a shared vertex cross. Faces sharing a
/// vertex and coplanar overlaps are not examined.
pub fn self_intersects(mesh: &TriMesh) -> bool {
    let faces = mesh.faces();
    let tris: Vec<[Point3; 3]> = (0..faces.len()).map(|f| mesh.triangle(f)).collect();
    (0..faces.len()).into_par_iter().any(|a| {
        (a + 1..faces.len()).any(|b| {
            if faces[a].iter().any(|i| faces[b].contains(i)) {
                return false;
            }
            edges_cross(&tris[a], &tris[b]) || edges_cross(&tris[b], &tris[a])
        })
    })
}

fn edges_cross(edges_of: &[Point3; 3], tri: &[Point3; 3]) -> bool {
    (0..3).any(|i| segment_hits_triangle(edges_of[i], edges_of[(i + 1) % 3], tri))
}

fn segment_hits_triangle(a: Point3, b: Point3, t: &[Point3; 3]) -> bool {
    let d = b - a;
    let e1 = t[1] - t[0];
    let e2 = t[2] - t[0];
    let p = d.cross(e2);
    let det = e1.dot(p);
    if det.abs() <= 1e-14 * e1.norm() * e2.norm() * d.norm() {
        return false;
    }
    let inv = 1.0 / det;
    let s = a - t[0];
    let u = s.dot(p) * inv;
    let q = s.cross(e1);
    let v = d.dot(q) * inv;
    let h = e2.dot(q) * inv;
    (0.0..=1.0).contains(&u) && v >= 0.0 && u + v <= 1.0 && (0.0..=1.0).contains(&h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::shapes;

    #[test]
    fn weights_sum_to_area() {
        let m = shapes::icosphere(1, 1.0);
        let w = lumped_weights(m.vertices(), m.faces());
        assert!(w.iter().all(|&x| x >= 0.0));
        assert!((w.iter().sum::<f64>() - m.total_area()).abs() < 1e-12);
    }

    #[test]
    fn flat_grid_energy_is_zero() {
        let m = shapes::flat_grid(4, 1.0);
        assert_eq!(discrete_energy(&m, &DiscreteEnergyConfig::exhaustive(9.0)).unwrap(), 0.0);
    }

    #[test]
    fn homogeneity() {
        let m = shapes::icosahedron(1.0);
        let c = DiscreteEnergyConfig::exhaustive(10.0);
        let e = discrete_energy(&m, &c).unwrap();
        let big = m.map_vertices(|x| x * 3.0).unwrap();
        let e3 = discrete_energy(&big, &c).unwrap();
        assert!((e3 / e - 3f64.powi(-2)).abs() < 1e-12);
    }

    #[test]
    fn budget_and_exponent() {
        let m = shapes::icosphere(2, 1.0);
        assert_eq!(discrete_energy(&m, &DiscreteEnergyConfig::exhaustive(9.0)), Err(MinimizeError::TooManyVertices(162)));
        let c = DiscreteEnergyConfig { p: 9.0, quadrature: Quadrature::Sampled { n: 10_000, seed: 1 } };
        assert!(discrete_energy(&m, &c).unwrap() > 0.0);
        let m = shapes::icosahedron(1.0);
        assert_eq!(discrete_energy(&m, &DiscreteEnergyConfig::exhaustive(8.0)), Err(MinimizeError::Subcritical(8.0)));
    }

    #[test]
    fn sampled_matches_exhaustive() {
        let m = shapes::icosahedron(1.0);
        let exact = discrete_energy(&m, &DiscreteEnergyConfig::exhaustive(9.0)).unwrap();
        let c = DiscreteEnergyConfig { p: 9.0, quadrature: Quadrature::Sampled { n: 400_000, seed: 3 } };
        let est = discrete_energy(&m, &c).unwrap();
        assert!((est / exact - 1.0).abs() < 0.05, "{est} vs {exact}");
    }

    #[test]
    fn intersection_flag() {
        assert!(!self_intersects(&shapes::icosphere(1, 1.0)));
        // two unit squares crossing each other
        let v = vec![
            Point3::new(-1.0, -1.0, 0.0),
            Point3::new(1.0, -1.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, -1.0),
            Point3::new(0.0, 0.0, 1.0),
            Point3::new(0.0, 2.0, 0.5),
        ];
        let m = TriMesh::new(v, vec![[0, 1, 2], [3, 4, 5]]).unwrap();
        assert!(self_intersects(&m));
    }
}
