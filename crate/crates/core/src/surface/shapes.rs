//! Mesh generators used by tests, the CLI and the optimizer.

use std::collections::HashMap;

use super::TriMesh;
use crate::geom::{Point3, Vec3};

fn build(vertices: Vec<Point3>, faces: Vec<[usize; 3]>) -> TriMesh {
    TriMesh::new(vertices, faces).expect("generated meshes are valid")
}

pub fn icosahedron(radius: f64) -> TriMesh {
    let (v, f) = icosahedron_raw();
    build(v.into_iter().map(|p| p * radius).collect(), f)
}

fn icosahedron_raw() -> (Vec<Point3>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let v = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let faces = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    (v.iter().map(|&a| Vec3::from(a).normalized()).collect(), faces)
}

/// Icosphere: `subdivisions` rounds of 1-to-4 splitting of the icosahedron,
/// vertices pushed to the sphere. Vertex counts 12, 42, 162, 642, 2562, ...
pub fn icosphere(subdivisions: u32, radius: f64) -> TriMesh {
    let (mut v, mut f) = icosahedron_raw();
    for _ in 0..subdivisions {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(f.len() * 4);
        let mut midpoint = |a: usize, b: usize, v: &mut Vec<Point3>| {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                v.push(((v[a] + v[b]) * 0.5).normalized());
                v.len() - 1
            })
        };
        for [a, b, c] in f {
            let ab = midpoint(a, b, &mut v);
            let bc = midpoint(b, c, &mut v);
            let ca = midpoint(c, a, &mut v);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        f = next;
    }
    build(v.into_iter().map(|p| p * radius).collect(), f)
}

/// Ellipsoid with semi-axes `(a, b, c)` from an icosphere.
pub fn ellipsoid(a: f64, b: f64, c: f64, subdivisions: u32) -> TriMesh {
    icosphere(subdivisions, 1.0)
        .map_vertices(|p| Vec3::new(p.x * a, p.y * b, p.z * c))
        .expect("scaled icosphere is valid")
}

/// Hexahedron from 8 corners ordered like the unit cube's `(x,y,z)` bits:
/// corner `i` has bit 0 = x, bit 1 = y, bit 2 = z.
pub fn hexahedron(corners: [Point3; 8]) -> TriMesh {
    let quads = [
        [0, 2, 3, 1], // z = 0
        [4, 5, 7, 6], // z = 1
        [0, 1, 5, 4], // y = 0
        [2, 6, 7, 3], // y = 1
        [0, 4, 6, 2], // x = 0
        [1, 3, 7, 5], // x = 1
    ];
    let faces = quads.iter().flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]]).collect();
    build(corners.to_vec(), faces)
}

/// Axis-aligned cube centred at the origin.
pub fn cube(edge: f64) -> TriMesh {
    let h = edge / 2.0;
    let corners = std::array::from_fn(|i| {
        let s = |bit: usize| if i >> bit & 1 == 1 { h } else { -h };
        Vec3::new(s(0), s(1), s(2))
    });
    hexahedron(corners)
}

/// Flat square `[-size/2, size/2]²` in the plane `z = 0`, `n x n` quads.
pub fn flat_grid(n: usize, size: f64) -> TriMesh {
    let n = n.max(1);
    let mut v = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            v.push(Vec3::new(size * (i as f64 / n as f64 - 0.5), size * (j as f64 / n as f64 - 0.5), 0.0));
        }
    }
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut f = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            f.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            f.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    build(v, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn icosphere_counts_and_area() {
        for (s, nv) in [(0, 12), (1, 42), (2, 162), (3, 642), (4, 2562)] {
            let m = icosphere(s, 1.0);
            assert_eq!(m.vertices().len(), nv);
            assert_eq!(m.faces().len(), 20 * 4usize.pow(s));
            assert!(m.is_watertight());
        }
        let m = icosphere(3, 1.0);
        assert!((m.total_area() - 4.0 * PI).abs() < 0.01 * 4.0 * PI);
    }

    #[test]
    fn flat_grid_is_open() {
        let m = flat_grid(4, 2.0);
        assert!(!m.is_watertight());
        assert!((m.total_area() - 4.0).abs() < 1e-14);
    }
}
