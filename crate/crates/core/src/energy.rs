//! Monte-Carlo estimates of the integral energy, its ball-restricted
//! version, the sphere scaling study and the Léger-type divergence study.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{point_plane_distance, Point3, Tetra, Vec3};
use crate::integrand::{IntegrandSpec, Mean};
use crate::rng::{self, domain, Stats};
use crate::surface::{AnalyticSurface, SurfaceOracle};

/// Smallest sample count accepted by the estimators.
pub const MIN_SAMPLES: usize = 1000;
/// Smallest number of accepted patch points for a local estimate.
pub const MIN_PATCH_POINTS: u64 = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite integrand value {value} at quadruple {quad:?}")]
    NonFinite { value: f64, quad: [Point3; 4] },
    #[error("patch too small for requested n ({accepted} accepted patch samples, need at least {required})")]
    PatchTooSmall { accepted: u64, required: u64 },
    #[error("supercritical exponent required (p > 8), got {0}")]
    Subcritical(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: u64,
    pub p: f64,
    pub spec: IntegrandSpec,
}

impl EnergyEstimate {
    /// `|a - b|` in units of the combined standard error.
    pub fn z_score(&self, other: &EnergyEstimate) -> f64 {
        let s = self.std_error.hypot(other.std_error);
        let d = (self.value - other.value).abs();
        if s == 0.0 {
            if d == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            d / s
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub radius: f64,
    pub estimate: EnergyEstimate,
    /// `value · radius^(p-8)`.
    pub normalized: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceRow {
    pub n: u32,
    pub r_n: f64,
    pub patch_integral: f64,
    pub std_error: f64,
    /// Smallest `dist(ξ, plane(x,y,z)) / r_n` over the sampled triples.
    pub min_dist_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceStudy {
    pub rows: Vec<DivergenceRow>,
    pub fitted_slope: f64,
    pub expected_slope: f64,
}

fn check_common(p: f64, n: usize) -> Result<(), EnergyError> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(EnergyError::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    if n < MIN_SAMPLES {
        return Err(EnergyError::InvalidParameter(format!("need at least {MIN_SAMPLES} samples, got {n}")));
    }
    Ok(())
}

fn quadruple(oracle: &SurfaceOracle, rng: &mut ChaCha8Rng) -> Tetra {
    Tetra(std::array::from_fn(|_| oracle.sample_point(rng).position))
}

fn powered(spec: &IntegrandSpec, t: &Tetra, p: f64) -> Result<f64, EnergyError> {
    let k = spec.eval(t);
    let v = k.powf(p);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EnergyError::NonFinite { value: k, quad: t.0 })
    }
}

/// Plain Monte-Carlo of `∫_{Σ⁴} f dμ` with independent area-uniform
/// quadruples. Returns `(value, std_error, stats)`.
pub fn estimate_integral(
    oracle: &SurfaceOracle,
    n: usize,
    seed: u64,
    f: impl Fn(&Tetra) -> f64 + Sync,
) -> Result<(f64, f64), EnergyError> {
    let stats = rng::chunked_stats(n, seed, domain::ENERGY, |r| {
        let t = quadruple(oracle, r);
        let v = f(&t);
        if v.is_finite() { Ok(v) } else { Err(EnergyError::NonFinite { value: v, quad: t.0 }) }
    })?;
    let a4 = oracle.total_area().powi(4);
    Ok((a4 * stats.mean, a4 * stats.std_error()))
}

/// Estimate of `∫_{Σ⁴} K(T)^p dμ(T)`.
pub fn estimate_mp(
    oracle: &SurfaceOracle,
    spec: IntegrandSpec,
    p: f64,
    n: usize,
    seed: u64,
) -> Result<EnergyEstimate, EnergyError> {
    check_common(p, n)?;
    let stats = rng::chunked_stats(n, seed, domain::ENERGY, |r| powered(&spec, &quadruple(oracle, r), p))?;
    let a4 = oracle.total_area().powi(4);
    Ok(EnergyEstimate {
        value: a4 * stats.mean,
        std_error: a4 * stats.std_error(),
        n_samples: n as u64,
        seed,
        p,
        spec,
    })
}

/// Largest integrand value seen over `n` sampled quadruples.
pub fn sampled_sup(oracle: &SurfaceOracle, spec: IntegrandSpec, n: usize, seed: u64) -> Result<f64, EnergyError> {
    rng::chunked(
        n,
        seed,
        domain::ENERGY,
        |r, count| {
            let mut m: f64 = 0.0;
            for _ in 0..count {
                let t = quadruple(oracle, r);
                let k = spec.eval(&t);
                if !k.is_finite() {
                    return Err(EnergyError::NonFinite { value: k, quad: t.0 });
                }
                m = m.max(k);
            }
            Ok(m)
        },
        f64::max,
        0.0,
    )
}

/// Number of global draws used to estimate the patch-area fraction.
fn pilot_draws(n: usize) -> usize {
    (4 * n).max(100_000)
}

/// Estimate of `∫_{(Σ∩B)⁴} K^p dμ` for the ball `B(center, radius)`.
/// Patch points come from rejection of global samples; the patch area is
/// `q · area(Σ)` with `q` the acceptance fraction of a separate pilot run,
/// and the reported error propagates both sources.
pub fn local_energy(
    oracle: &SurfaceOracle,
    center: Point3,
    radius: f64,
    spec: IntegrandSpec,
    p: f64,
    n: usize,
    seed: u64,
) -> Result<EnergyEstimate, EnergyError> {
    check_common(p, n)?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(EnergyError::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    let in_ball = |x: Point3| x.dist(center) <= radius;
    let pilot_seed = rng::derive(seed, 0);
    let m = pilot_draws(n);
    let hits = rng::chunked::<u64, EnergyError>(
        m,
        pilot_seed,
        domain::LOCAL,
        |r, count| Ok((0..count).filter(|_| in_ball(oracle.sample_point(r).position)).count() as u64),
        |a, b| a + b,
        0,
    )?;
    if hits < MIN_PATCH_POINTS {
        return Err(EnergyError::PatchTooSmall { accepted: hits, required: MIN_PATCH_POINTS });
    }
    let q = hits as f64 / m as f64;
    let q_rel_err = ((1.0 - q) / (q * m as f64)).sqrt();
    // generous cap on rejection attempts; the pilot already proved q > 0
    let max_tries = ((400.0 / q).ceil() as u64).max(1000);
    let stats = rng::chunked_stats(n, rng::derive(seed, 1), domain::LOCAL, |r| {
        let mut pts = [Vec3::ZERO; 4];
        for slot in &mut pts {
            let mut tries = 0u64;
            *slot = loop {
                let x = oracle.sample_point(r).position;
                if in_ball(x) {
                    break x;
                }
                tries += 1;
                if tries > max_tries {
                    return Err(EnergyError::PatchTooSmall { accepted: hits, required: MIN_PATCH_POINTS });
                }
            };
        }
        powered(&spec, &Tetra(pts), p)
    })?;
    let area4 = (q * oracle.total_area()).powi(4);
    let value = area4 * stats.mean;
    let mean_rel = if stats.mean > 0.0 { stats.std_error() / stats.mean } else { 0.0 };
    let std_error = if value > 0.0 {
        value * mean_rel.hypot(4.0 * q_rel_err)
    } else {
        area4 * stats.std_error()
    };
    Ok(EnergyEstimate { value, std_error, n_samples: n as u64, seed, p, spec })
}

/// Energies of round spheres of the given radii, each row with its own
/// derived seed.
pub fn scaling_study(
    spec: IntegrandSpec,
    p: f64,
    radii: &[f64],
    n: usize,
    seed: u64,
) -> Result<Vec<ScalingRow>, EnergyError> {
    if radii.is_empty() {
        return Err(EnergyError::InvalidParameter("no radii given".into()));
    }
    radii
        .iter()
        .enumerate()
        .map(|(i, &rho)| {
            let sphere = AnalyticSurface::sphere(rho)
                .map_err(|e| EnergyError::InvalidParameter(e.to_string()))?;
            let row_seed = rng::derive(seed, domain::SCALING << 32 | i as u64);
            let estimate = estimate_mp(&sphere.into(), spec, p, n, row_seed)?;
            Ok(ScalingRow { radius: rho, estimate, normalized: estimate.value * rho.powf(p - 8.0) })
        })
        .collect()
}

/// `(α^{5p} / E)^{1/(p-8)}`, evaluated in logs.
pub fn stopping_radius_r0(energy: f64, p: f64, alpha: f64) -> Result<f64, EnergyError> {
    if !(p > 8.0) {
        return Err(EnergyError::Subcritical(p));
    }
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(EnergyError::InvalidParameter(format!("energy must be positive, got {energy}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(EnergyError::InvalidParameter(format!("alpha must lie in (0,1), got {alpha}")));
    }
    Ok(((5.0 * p * alpha.ln() - energy.ln()) / (p - 8.0)).exp())
}

/// Area-uniform point of the spherical cap `{y ∈ S²: |y - a| ≤ c}`, `a` on
/// the unit sphere.
pub fn sample_cap<R: Rng + ?Sized>(a: Vec3, c: f64, rng: &mut R) -> Point3 {
    let h = rng.random::<f64>() * c * c / 2.0;
    let s = (h * (2.0 - h)).sqrt();
    let phi = 2.0 * PI * rng.random::<f64>();
    let e1 = a.any_orthonormal();
    let e2 = a.cross(e1);
    a * (1.0 - h) + (e1 * phi.cos() + e2 * phi.sin()) * s
}

/// Centres of the three caps at level `n`, and `r_n = 4^{-n}`.
pub fn divergence_centres(n: u32) -> (f64, [Vec3; 3]) {
    let r = 0.25f64.powi(n as i32);
    let top = |x: f64, y: f64| Vec3::new(x, y, (1.0 - x * x - y * y).sqrt());
    (r, [top(r, 0.0), top(r, 2.0 * r), top(r, -2.0 * r)])
}

/// Least-squares slope and intercept of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Integrals of the Léger-type integrand to the power `p` over triples of
/// small caps near the north pole with ξ fixed at the pole, for levels
/// `n = 1..=n_max`, and the log-log slope against `r_n`.
pub fn divergence_study(
    alpha: f64,
    p: f64,
    mean: Mean,
    eps: f64,
    n_max: u32,
    samples: usize,
    seed: u64,
) -> Result<DivergenceStudy, EnergyError> {
    let spec = IntegrandSpec::leger(mean, alpha).map_err(|e| EnergyError::InvalidParameter(e.to_string()))?;
    if !(alpha > 1.0) {
        return Err(EnergyError::InvalidParameter(format!("alpha must exceed 1, got {alpha}")));
    }
    check_common(p, samples)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(EnergyError::InvalidParameter(format!("eps must lie in (0,1), got {eps}")));
    }
    if !(2..=8).contains(&n_max) {
        return Err(EnergyError::InvalidParameter(format!("n_max must lie in 2..=8, got {n_max}")));
    }
    let xi = Vec3::Z;
    let mut rows = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        let (r, centres) = divergence_centres(n);
        let c = eps * r * r;
        let row_seed = rng::derive(seed, n as u64);
        let (stats, min_ratio) = rng::chunked(
            samples,
            row_seed,
            domain::DIVERGE,
            |rg, count| {
                let mut s = Stats::default();
                let mut min_ratio = f64::INFINITY;
                for _ in 0..count {
                    let [x, y, z] = centres.map(|a| sample_cap(a, c, rg));
                    let t = Tetra([x, y, z, xi]);
                    if let Ok(d) = point_plane_distance(xi, x, y, z) {
                        min_ratio = min_ratio.min(d / r);
                    }
                    s.push(powered(&spec, &t, p)?);
                }
                Ok((s, min_ratio))
            },
            |a, b| (Stats::merge(a.0, b.0), a.1.min(b.1)),
            (Stats::default(), f64::INFINITY),
        )?;
        let cap3 = (PI * c * c).powi(3);
        rows.push(DivergenceRow {
            n,
            r_n: r,
            patch_integral: cap3 * stats.mean,
            std_error: cap3 * stats.std_error(),
            min_dist_ratio: min_ratio,
        });
    }
    let lx: Vec<f64> = rows.iter().map(|r| r.r_n.ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.patch_integral.ln()).collect();
    let (fitted_slope, _) = linear_fit(&lx, &ly);
    Ok(DivergenceStudy { rows, fitted_slope, expected_slope: 12.0 + (1.0 - alpha) * p })
}
