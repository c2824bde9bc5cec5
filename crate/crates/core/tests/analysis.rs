use std::f64::consts::PI;

use menger_surf::analysis::*;
use menger_surf::energy::linear_fit;
use menger_surf::geom::Vec3;
use menger_surf::surface::{shapes, AnalyticSurface, SurfaceOracle};

fn sphere() -> SurfaceOracle {
    AnalyticSurface::sphere(1.0).unwrap().into()
}

#[test]
fn sphere_density_is_pi_everywhere() {
    let o = sphere();
    for x in [Vec3::Z, Vec3::new(0.6, 0.0, 0.8), Vec3::new(-0.48, 0.6, -0.64)] {
        for r in [0.5, 0.2] {
            let d = density_quotient(&o, x, r, 8).unwrap();
            if r == 0.5 {
                assert!((d.quotient / PI - 1.0).abs() < 0.01, "{d:?}");
            }
            assert!(d.passes_theorem31);
            // the reported bound covers the exact cap area
            assert!((d.patch_area - PI * r * r).abs() <= d.error_bound + 1e-12, "{d:?}");
        }
    }
}

#[test]
fn icosphere_density_within_three_percent() {
    let m = shapes::icosphere(4, 1.0);
    let o: SurfaceOracle = m.clone().into();
    for i in [0, 100, 1000] {
        let x = m.vertices()[i];
        let d = density_quotient(&o, x, 0.5, 8).unwrap();
        assert!((d.quotient / PI - 1.0).abs() < 0.03, "{d:?}");
        assert!(d.passes_theorem31);
    }
}

#[test]
fn plane_density_and_beta() {
    let o: SurfaceOracle = shapes::flat_grid(8, 4.0).into();
    let d = density_quotient(&o, Vec3::ZERO, 0.3, 8).unwrap();
    assert!((d.quotient / PI - 1.0).abs() < 0.01);
    let b = beta_number(&o, Vec3::new(0.1, -0.2, 0.0), 0.5, 500, 1, 0).unwrap();
    assert!(b.beta <= 1e-6, "{b:?}");
}

#[test]
fn off_surface_points_are_rejected() {
    let o = sphere();
    assert!(matches!(density_quotient(&o, Vec3::new(0.0, 0.0, 1.1), 0.5, 4), Err(AnalysisError::NotOnSurface(_))));
}

#[test]
fn sphere_beta_decays_linearly() {
    let o = sphere();
    let radii = [0.4, 0.2, 0.1, 0.05];
    let mut betas = Vec::new();
    for (i, &r) in radii.iter().enumerate() {
        let b = beta_number(&o, Vec3::Z, r, 2000, 2, i as u64).unwrap();
        assert!(b.beta <= r / 2.0 + 0.01, "{b:?}");
        assert!((0.0..=1.0).contains(&b.beta));
        betas.push(b.beta);
    }
    let lx: Vec<f64> = radii.iter().map(|r: &f64| r.ln()).collect();
    let ly: Vec<f64> = betas.iter().map(|b| b.ln()).collect();
    let (slope, _) = linear_fit(&lx, &ly);
    assert!((slope - 1.0).abs() <= 0.15, "{slope}");
}

#[test]
fn finer_grid_never_raises_beta() {
    let o: SurfaceOracle = AnalyticSurface::torus(2.0, 1.0).unwrap().into();
    let x = o.closest_point(Vec3::new(3.0, 0.0, 0.0)).position;
    let offsets = beta_patch(&o, x, 0.5, 1000, 3).unwrap();
    let mut last = f64::INFINITY;
    for level in 0..=3 {
        let (b, _) = beta_on_samples(&offsets, level);
        assert!(b <= last);
        last = b;
    }
}

#[test]
fn sphere_oscillation_profile() {
    let o = sphere();
    let scales = [0.025, 0.05, 0.1, 0.2, 0.4];
    let rows = normal_oscillation_profile(&o, Vec3::Z, &scales, 2000, 1).unwrap();
    for r in &rows {
        // chord d subtends 2 asin(d/2); sampled pairs reach almost the full scale
        let exact = 2.0 * (r.d / 2.0).asin();
        assert!(r.max_oscillation <= exact + 1e-12 && r.max_oscillation > 0.9 * exact, "{r:?}");
    }
    let fit = holder_exponent_fit(&rows.iter().map(|r| (r.d, r.max_oscillation)).collect::<Vec<_>>()).unwrap();
    assert!((fit.exponent - 1.0).abs() <= 0.1, "{fit:?}");
    for p in [9.0, 10.0, 16.0, 24.0] {
        assert!(fit.exponent >= exponents(p).unwrap().lambda);
    }
}

#[test]
fn torus_oscillation_respects_curvature() {
    let o: SurfaceOracle = AnalyticSurface::torus(2.0, 1.0).unwrap().into();
    let x = o.closest_point(Vec3::new(0.0, 1.0, 0.0)).position;
    let rows = normal_oscillation_profile(&o, x, &[0.05, 0.1, 0.2], 1000, 2).unwrap();
    for r in rows {
        assert!(r.max_oscillation <= r.d / 1.0 * 1.1, "{r:?}");
    }
}

#[test]
fn scale_beyond_diameter_is_an_error() {
    let o = sphere();
    assert!(normal_oscillation_profile(&o, Vec3::Z, &[0.1, 5.0], 100, 0).is_err());
    assert!(normal_oscillation_profile(&o, Vec3::Z, &[0.2, 0.1], 100, 0).is_err());
}

#[test]
fn holder_fit_edge_cases() {
    let c = holder_exponent_fit(&[(0.1, 2.0), (0.2, 2.0), (0.4, 2.0)]).unwrap();
    assert!(c.exponent.abs() < 1e-12);
    assert!(holder_exponent_fit(&[(0.1, 1.0), (0.2, 0.0), (0.3, 1.0)]).is_err());
    assert!(holder_exponent_fit(&[(0.1, 1.0), (0.2, 1.0)]).is_err());
}
