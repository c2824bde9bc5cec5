//! Diagnostics of surface regularity: density quotients, beta numbers,
//! normal oscillation profiles and power-law fits against the predicted
//! Hölder exponents.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::linear_fit;
use crate::geom::{fibonacci_cap, Point3, Vec3};
use crate::rng::{self, domain};
use crate::surface::cover::BallSampler;
use crate::surface::{Cell, CellClass, SurfaceOracle};

/// Allowed distance between a query point and the surface.
pub const ON_SURFACE_TOL: f64 = 1e-6;
/// Directions in the level-0 search grid for beta numbers.
pub const BETA_BASE_GRID: usize = 500;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("supercritical exponent required (p > 8), got {0}")]
    Subcritical(f64),
    #[error("point is {0:e} away from the surface")]
    NotOnSurface(f64),
    #[error("empty patch")]
    EmptyPatch,
    #[error("scale {scale} exceeds surface diameter {diameter}")]
    ScaleTooLarge { scale: f64, diameter: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub kappa: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub center: Point3,
    pub radius: f64,
    pub patch_area: f64,
    pub quotient: f64,
    pub passes_theorem31: bool,
    /// Total area of straddling leaf cells; bounds `|patch_area - true area|`.
    pub error_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaReport {
    pub center: Point3,
    pub radius: f64,
    pub beta: f64,
    pub best_normal: Vec3,
    pub grid_level: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillationRow {
    pub d: f64,
    pub max_oscillation: f64,
    pub pairs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderFit {
    pub exponent: f64,
    pub log_constant: f64,
    pub r_squared: f64,
}

/// First-pass and optimal Hölder exponents `(p-8)/(p+16)` and `1 - 8/p`.
pub fn exponents(p: f64) -> Result<Exponents, AnalysisError> {
    if !(p > 8.0) || p.is_nan() {
        return Err(AnalysisError::Subcritical(p));
    }
    let e = Exponents { kappa: (p - 8.0) / (p + 16.0), lambda: 1.0 - 8.0 / p };
    debug_assert!(0.0 < e.kappa && e.kappa < e.lambda && e.lambda <= 1.0);
    Ok(e)
}

/// The ε balancing `ε^{16+p} d^{8-p} = c₁(η,p)·E` with
/// `c₁ = η^{-3p} (18·10⁴)^p`, solved in logs.
pub fn balance_epsilon(eta: f64, p: f64, d: f64, energy: f64) -> Result<f64, AnalysisError> {
    if !(p > 8.0) {
        return Err(AnalysisError::Subcritical(p));
    }
    if !(eta > 0.0 && eta < 1.0) || !(d > 0.0) || !(energy > 0.0) {
        return Err(AnalysisError::InvalidParameter(format!("eta={eta}, d={d}, E={energy}")));
    }
    let log_c1 = -3.0 * p * eta.ln() + p * 18e4f64.ln();
    Ok(((log_c1 + energy.ln() + (p - 8.0) * d.ln()) / (16.0 + p)).exp())
}

fn check_on_surface(oracle: &SurfaceOracle, x: Point3) -> Result<(), AnalysisError> {
    let d = oracle.distance(x);
    if d > ON_SURFACE_TOL {
        return Err(AnalysisError::NotOnSurface(d));
    }
    Ok(())
}

/// Area of `Σ ∩ B(x, R)` by cell classification: inside cells count
/// exactly, straddling cells are quadrisected down to `depth` levels and the
/// remaining leaves count when their centroid is inside.
pub fn density_quotient(
    oracle: &SurfaceOracle,
    x: Point3,
    radius: f64,
    depth: u32,
) -> Result<DensityReport, AnalysisError> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(AnalysisError::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    check_on_surface(oracle, x)?;
    let mut area = 0.0;
    let mut straddle = 0.0;
    let mut stack: Vec<(Cell, u32)> = oracle.base_cells(x, radius).into_iter().map(|c| (c, 0)).collect();
    stack.reverse();
    while let Some((c, level)) = stack.pop() {
        match oracle.classify_cell(&c, x, radius).0 {
            CellClass::Outside => {}
            CellClass::Inside => area += oracle.cell_area(&c),
            CellClass::Straddle if level >= depth => {
                let a = oracle.cell_area(&c);
                straddle += a;
                if oracle.cell_centroid(&c).dist(x) <= radius {
                    area += a;
                }
            }
            CellClass::Straddle => {
                for k in oracle.split_cell(&c).into_iter().rev() {
                    stack.push((k, level + 1));
                }
            }
        }
    }
    let quotient = area / (radius * radius);
    Ok(DensityReport {
        center: x,
        radius,
        patch_area: area,
        quotient,
        passes_theorem31: quotient >= std::f64::consts::FRAC_PI_2,
        error_bound: straddle,
    })
}

fn sup_height(offsets: &[Vec3], n: Vec3) -> f64 {
    offsets.iter().fold(0.0, |m, o| m.max(o.dot(n).abs()))
}

/// Compass search on the sphere of normals starting from `n` with angular
/// step `step`; never returns a worse value than the start.
fn refine_normal(offsets: &[Vec3], mut n: Vec3, mut step: f64) -> (f64, Vec3) {
    let mut best = sup_height(offsets, n);
    while step > 1e-10 {
        let e1 = n.any_orthonormal();
        let e2 = n.cross(e1);
        let mut improved = false;
        for axis in [e1, -e1, e2, -e2] {
            let cand = n.rotate(axis, step);
            let v = sup_height(offsets, cand);
            if v < best {
                best = v;
                n = cand;
                improved = true;
                break;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (best, n)
}

/// Upper estimate of `inf_planes sup_{y ∈ patch} dist(y, plane) / r` over
/// planes through `x`, from `n_patch` patch samples. Grids of every level up
/// to `grid_level` are searched (each followed by local refinement) and the
/// running minimum is kept, so the result never increases with the level.
pub fn beta_number(
    oracle: &SurfaceOracle,
    x: Point3,
    r: f64,
    n_patch: usize,
    grid_level: u32,
    seed: u64,
) -> Result<BetaReport, AnalysisError> {
    let offsets = beta_patch(oracle, x, r, n_patch, seed)?;
    let (beta, best_normal) = beta_on_samples(&offsets, grid_level);
    Ok(BetaReport { center: x, radius: r, beta, best_normal, grid_level })
}

/// Patch samples of `Σ ∩ B(x, r)` as offsets `(y - x) / r`.
pub fn beta_patch(
    oracle: &SurfaceOracle,
    x: Point3,
    r: f64,
    n_patch: usize,
    seed: u64,
) -> Result<Vec<Vec3>, AnalysisError> {
    if !(r > 0.0 && r.is_finite()) || n_patch == 0 {
        return Err(AnalysisError::InvalidParameter(format!("r={r}, n_patch={n_patch}")));
    }
    let sampler = BallSampler::new(oracle, x, r).ok_or(AnalysisError::EmptyPatch)?;
    let mut rng = rng::stream(seed, domain::BETA, 0);
    Ok((0..n_patch).map(|_| (sampler.sample(&mut rng).position - x) / r).collect())
}

/// The grid search of [`beta_number`] on fixed offsets.
pub fn beta_on_samples(offsets: &[Vec3], grid_level: u32) -> (f64, Vec3) {
    let mut best = (f64::INFINITY, Vec3::Z);
    for level in 0..=grid_level {
        let count = BETA_BASE_GRID << (2 * level);
        let grid = fibonacci_cap(Vec3::Z, 0.0, count);
        let values: Vec<f64> = grid.par_iter().map(|&n| sup_height(offsets, n)).collect();
        let (k, v) = values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
        if v < best.0 {
            best = (v, grid[k]);
        }
        let spacing = (2.0 * std::f64::consts::PI / count as f64).sqrt();
        let refined = refine_normal(offsets, grid[k], spacing);
        if refined.0 < best.0 {
            best = refined;
        }
    }
    best
}

/// Maximum normal angle between `x` and sampled surface points at distance
/// `[d/2, d]` from `x`, for each scale `d`.
pub fn normal_oscillation_profile(
    oracle: &SurfaceOracle,
    x: Point3,
    scales: &[f64],
    pairs_per_scale: usize,
    seed: u64,
) -> Result<Vec<OscillationRow>, AnalysisError> {
    if scales.is_empty() || pairs_per_scale == 0 {
        return Err(AnalysisError::InvalidParameter("need at least one scale and one pair".into()));
    }
    if scales.windows(2).any(|w| w[1] < w[0]) || scales[0] <= 0.0 {
        return Err(AnalysisError::InvalidParameter("scales must be positive and ascending".into()));
    }
    let diameter = oracle.diameter_bound();
    if let Some(&s) = scales.iter().find(|&&s| s > diameter) {
        return Err(AnalysisError::ScaleTooLarge { scale: s, diameter });
    }
    check_on_surface(oracle, x)?;
    let nx = oracle.closest_point(x).normal;
    scales
        .par_iter()
        .enumerate()
        .map(|(i, &d)| {
            let sampler = BallSampler::new(oracle, x, d).ok_or(AnalysisError::EmptyPatch)?;
            let mut rng = rng::stream(seed, domain::OSCILLATION, i as u64);
            let (mut found, mut tries, mut worst) = (0usize, 0usize, 0.0f64);
            while found < pairs_per_scale && tries < 1000 * pairs_per_scale {
                tries += 1;
                let y = sampler.sample(&mut rng);
                if y.position.dist(x) >= d / 2.0 {
                    found += 1;
                    worst = worst.max(nx.angle(y.normal));
                }
            }
            if found == 0 {
                return Err(AnalysisError::EmptyPatch);
            }
            Ok(OscillationRow { d, max_oscillation: worst, pairs: found })
        })
        .collect()
}

/// Least-squares fit of `log(osc) = exponent·log(d) + log_constant`.
pub fn holder_exponent_fit(profile: &[(f64, f64)]) -> Result<HolderFit, AnalysisError> {
    if profile.len() < 3 {
        return Err(AnalysisError::InvalidParameter("need at least 3 points".into()));
    }
    if profile.iter().any(|&(d, o)| !(d > 0.0 && o > 0.0)) {
        return Err(AnalysisError::InvalidParameter("profile entries must be positive".into()));
    }
    let lx: Vec<f64> = profile.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = profile.iter().map(|p| p.1.ln()).collect();
    let (exponent, log_constant) = linear_fit(&lx, &ly);
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let ss_tot: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - exponent * x - log_constant).powi(2)).sum();
    let r_squared = if ss_tot <= f64::EPSILON * ly.len() as f64 { 1.0 } else { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) };
    Ok(HolderFit { exponent, log_constant, r_squared })
}
