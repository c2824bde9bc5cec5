//! Generators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use menger_surf::geom::{classify_voluminous, classify_wide, point_plane_distance, simplex_measures, Tetra, Triangle, Vec3};
use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn in_cube<R: Rng>(r: &mut R, half: f64) -> Vec3 {
    Vec3::new(r.random_range(-half..half), r.random_range(-half..half), r.random_range(-half..half))
}

pub fn in_ball<R: Rng>(r: &mut R, c: Vec3, radius: f64) -> Vec3 {
    loop {
        let p = in_cube(r, 1.0);
        if p.norm2() <= 1.0 {
            return c + p * radius;
        }
    }
}

pub fn unit_vector<R: Rng>(r: &mut R) -> Vec3 {
    loop {
        let p = in_cube(r, 1.0);
        let n = p.norm();
        if n > 1e-3 && n <= 1.0 {
            return p / n;
        }
    }
}

/// Random tetrahedron in `[-1,1]³` whose smallest height is at least
/// `ratio` times its diameter.
pub fn shaped_tetra<R: Rng>(r: &mut R, ratio: f64) -> Tetra {
    loop {
        let t = Tetra::new(in_cube(r, 1.0), in_cube(r, 1.0), in_cube(r, 1.0), in_cube(r, 1.0));
        let m = simplex_measures(&t);
        if m.min_height >= ratio * m.diameter {
            return t;
        }
    }
}

/// Rejection sampler for the `(θ,d)`-voluminous class: vertices in `B(x0,2d)`.
pub fn voluminous_tetra<R: Rng>(r: &mut R, theta: f64, d: f64) -> Tetra {
    let x0 = in_cube(r, 10.0);
    loop {
        let t = Tetra::new(x0, in_ball(r, x0, 2.0 * d), in_ball(r, x0, 2.0 * d), in_ball(r, x0, 2.0 * d));
        if classify_voluminous(&t, theta, d) {
            return t;
        }
    }
}

/// A `(θ,d)`-wide base with an apex in `B(x0,2d)` at height at least `κd`.
pub fn wide_base_tetra<R: Rng>(r: &mut R, theta: f64, kappa: f64, d: f64) -> Tetra {
    let x0 = in_cube(r, 10.0);
    let (x1, x2) = loop {
        let (x1, x2) = (in_ball(r, x0, 2.0 * d), in_ball(r, x0, 2.0 * d));
        if classify_wide(&Triangle([x0, x1, x2]), theta, d) {
            break (x1, x2);
        }
    };
    loop {
        let x3 = in_ball(r, x0, 2.0 * d);
        if point_plane_distance(x3, x0, x1, x2).unwrap() >= kappa * d {
            return Tetra::new(x0, x1, x2, x3);
        }
    }
}

/// Circumradius from the centre equidistant to all four vertices, solved with
/// an LU factorization.
pub fn circumradius_by_solve(t: &Tetra) -> f64 {
    let v = t.0;
    let row = |i: usize| (v[i] - v[0]) * 2.0;
    let m = Matrix3::from_rows(&[
        nalgebra::RowVector3::new(row(1).x, row(1).y, row(1).z),
        nalgebra::RowVector3::new(row(2).x, row(2).y, row(2).z),
        nalgebra::RowVector3::new(row(3).x, row(3).y, row(3).z),
    ]);
    let rhs = Vector3::new(v[1].norm2() - v[0].norm2(), v[2].norm2() - v[0].norm2(), v[3].norm2() - v[0].norm2());
    let c = m.lu().solve(&rhs).expect("non-singular");
    Vec3::new(c.x, c.y, c.z).dist(v[0])
}

pub fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

/// All 24 orderings of four indices.
pub fn permutations4() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    if (0..4).all(|i| p.contains(&i)) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

pub fn point() -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-5.0f64..5.0).prop_map(|[x, y, z]| Vec3::new(x, y, z))
}

/// Tetrahedra with smallest height at least 1% of the diameter.
pub fn tetra() -> impl Strategy<Value = Tetra> {
    prop::array::uniform4(point()).prop_map(Tetra).prop_filter("nearly flat", |t| {
        let m = simplex_measures(t);
        m.min_height >= 1e-2 * m.diameter
    })
}

pub fn unit() -> impl Strategy<Value = Vec3> {
    point().prop_filter("too short", |v| v.norm() > 0.1).prop_map(|v| v.normalized())
}
