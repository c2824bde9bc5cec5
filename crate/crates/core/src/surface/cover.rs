//! Cells: pieces of the surface (mesh sub-triangles or analytic parameter
//! rectangles) with exact areas, used for ball-restricted area quadrature and
//! ball-restricted sampling.

use rand::{Rng, SeedableRng};

use super::analytic::ParamRect;
use super::mesh::closest_on_triangle;
use super::{SurfaceOracle, SurfacePoint};
use crate::geom::{triangle_area, Point3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    /// Sub-triangle of a mesh face, corners in barycentric `(s, t)` form.
    Tri { face: usize, bary: [(f64, f64); 3] },
    Rect(ParamRect),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellClass {
    Inside,
    Outside,
    Straddle,
}

/// Safety factor on the sampled cell radius of curved cells.
const BULGE: f64 = 1.25;

impl SurfaceOracle {
    fn tri_corners(&self, face: usize, bary: &[(f64, f64); 3]) -> [Point3; 3] {
        match self {
            SurfaceOracle::Mesh(m) => bary.map(|(s, t)| m.face_point(face, s, t).position),
            SurfaceOracle::Analytic(_) => unreachable!("triangle cell on analytic surface"),
        }
    }

    fn rect_point(&self, r: &ParamRect, a: f64, b: f64) -> Point3 {
        match self {
            SurfaceOracle::Analytic(s) => s.param_point(r.patch, r.u.0 + a * (r.u.1 - r.u.0), r.v.0 + b * (r.v.1 - r.v.0)),
            SurfaceOracle::Mesh(_) => unreachable!("parameter cell on a mesh"),
        }
    }

    pub fn cell_area(&self, c: &Cell) -> f64 {
        match c {
            Cell::Tri { face, bary } => {
                let [a, b, c] = self.tri_corners(*face, bary);
                triangle_area(a, b, c)
            }
            Cell::Rect(r) => match self {
                SurfaceOracle::Analytic(s) => s.rect_area(r),
                SurfaceOracle::Mesh(_) => unreachable!(),
            },
        }
    }

    pub fn cell_centroid(&self, c: &Cell) -> Point3 {
        match c {
            Cell::Tri { face, bary } => {
                let [a, b, c] = self.tri_corners(*face, bary);
                (a + b + c) / 3.0
            }
            Cell::Rect(r) => self.rect_point(r, 0.5, 0.5),
        }
    }

    /// Returns the class and a size measure (circumscribing radius estimate).
    pub fn classify_cell(&self, c: &Cell, centre: Point3, radius: f64) -> (CellClass, f64) {
        match c {
            Cell::Tri { face, bary } => {
                let tri = self.tri_corners(*face, bary);
                let g = (tri[0] + tri[1] + tri[2]) / 3.0;
                let size = tri.iter().map(|p| p.dist(g)).fold(0.0, f64::max);
                if tri.iter().all(|p| p.dist(centre) <= radius) {
                    (CellClass::Inside, size)
                } else if closest_on_triangle(centre, &tri).0.dist(centre) > radius {
                    (CellClass::Outside, size)
                } else {
                    (CellClass::Straddle, size)
                }
            }
            Cell::Rect(r) => {
                let mid = self.rect_point(r, 0.5, 0.5);
                let mut size: f64 = 0.0;
                for a in [0.0, 0.5, 1.0] {
                    for b in [0.0, 0.5, 1.0] {
                        size = size.max(self.rect_point(r, a, b).dist(mid));
                    }
                }
                let size = size * BULGE;
                let d = mid.dist(centre);
                let class = if d + size <= radius {
                    CellClass::Inside
                } else if d - size > radius {
                    CellClass::Outside
                } else {
                    CellClass::Straddle
                };
                (class, size)
            }
        }
    }

    pub fn split_cell(&self, c: &Cell) -> [Cell; 4] {
        match *c {
            Cell::Tri { face, bary: [a, b, c] } => {
                let m = |p: (f64, f64), q: (f64, f64)| (0.5 * (p.0 + q.0), 0.5 * (p.1 + q.1));
                let (ab, bc, ca) = (m(a, b), m(b, c), m(c, a));
                [
                    Cell::Tri { face, bary: [a, ab, ca] },
                    Cell::Tri { face, bary: [ab, b, bc] },
                    Cell::Tri { face, bary: [ca, bc, c] },
                    Cell::Tri { face, bary: [ab, bc, ca] },
                ]
            }
            Cell::Rect(r) => {
                let um = 0.5 * (r.u.0 + r.u.1);
                let vm = 0.5 * (r.v.0 + r.v.1);
                let q = |u: (f64, f64), v: (f64, f64)| Cell::Rect(ParamRect { patch: r.patch, u, v });
                [
                    q((r.u.0, um), (r.v.0, vm)),
                    q((um, r.u.1), (r.v.0, vm)),
                    q((r.u.0, um), (vm, r.v.1)),
                    q((um, r.u.1), (vm, r.v.1)),
                ]
            }
        }
    }

    /// Area-uniform sample inside a cell.
    pub fn sample_cell<R: Rng + ?Sized>(&self, c: &Cell, rng: &mut R) -> SurfacePoint {
        match (self, c) {
            (SurfaceOracle::Mesh(m), Cell::Tri { face, bary }) => {
                let r1 = rng.random::<f64>().sqrt();
                let r2 = rng.random::<f64>();
                let w = [1.0 - r1, r1 * (1.0 - r2), r1 * r2];
                let s = w[0] * bary[0].0 + w[1] * bary[1].0 + w[2] * bary[2].0;
                let t = w[0] * bary[0].1 + w[1] * bary[1].1 + w[2] * bary[2].1;
                m.face_point(*face, s, t)
            }
            (SurfaceOracle::Analytic(s), Cell::Rect(r)) => s.sample_rect(r, rng),
            _ => unreachable!("cell does not belong to this oracle"),
        }
    }

    /// Starting cells that may meet `B(centre, radius)`: candidate mesh
    /// faces, or the whole analytic base grid.
    pub fn base_cells(&self, centre: Point3, radius: f64) -> Vec<Cell> {
        match self {
            SurfaceOracle::Mesh(m) => m
                .ball_faces(centre, radius)
                .into_iter()
                .map(|f| Cell::Tri { face: f, bary: [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)] })
                .collect(),
            SurfaceOracle::Analytic(s) => {
                let (nu, nv) = s.base_grid();
                let mut out = Vec::new();
                for patch in 0..s.patch_count() {
                    let dom = s.patch_domain(patch);
                    let (hu, hv) = ((dom.u.1 - dom.u.0) / nu as f64, (dom.v.1 - dom.v.0) / nv as f64);
                    for i in 0..nu {
                        for j in 0..nv {
                            out.push(Cell::Rect(ParamRect {
                                patch,
                                u: (dom.u.0 + i as f64 * hu, dom.u.0 + (i + 1) as f64 * hu),
                                v: (dom.v.0 + j as f64 * hv, dom.v.0 + (j + 1) as f64 * hv),
                            }));
                        }
                    }
                }
                out
            }
        }
    }

    /// Cells covering `Σ ∩ B(centre, radius)`: whole mesh faces, or analytic
    /// parameter rectangles refined until straddling cells are small against
    /// the radius. Outside cells are dropped; order is deterministic.
    pub fn ball_cells(&self, centre: Point3, radius: f64) -> Vec<(Cell, CellClass)> {
        let mut out = Vec::new();
        for c in self.base_cells(centre, radius) {
            match self {
                SurfaceOracle::Mesh(_) => {
                    let (class, _) = self.classify_cell(&c, centre, radius);
                    if class != CellClass::Outside {
                        out.push((c, class));
                    }
                }
                SurfaceOracle::Analytic(_) => self.refine_into(c, centre, radius, 0, &mut out),
            }
        }
        out
    }

    fn refine_into(&self, c: Cell, centre: Point3, radius: f64, level: u32, out: &mut Vec<(Cell, CellClass)>) {
        let (class, size) = self.classify_cell(&c, centre, radius);
        match class {
            CellClass::Outside => {}
            CellClass::Inside => out.push((c, class)),
            CellClass::Straddle => {
                if size <= radius / 8.0 || level >= 30 {
                    out.push((c, class));
                } else {
                    for s in self.split_cell(&c) {
                        self.refine_into(s, centre, radius, level + 1, out);
                    }
                }
            }
        }
    }

    /// Samples `count` area-uniform points of `Σ ∩ B(centre, radius)`.
    /// Returns `None` when the patch is empty.
    pub fn sample_in_ball<R: Rng + ?Sized>(
        &self,
        centre: Point3,
        radius: f64,
        count: usize,
        rng: &mut R,
    ) -> Option<Vec<SurfacePoint>> {
        let sampler = BallSampler::new(self, centre, radius)?;
        Some((0..count).map(|_| sampler.sample(rng)).collect())
    }
}

/// Reusable sampler for one ball-restricted patch.
pub struct BallSampler<'a> {
    oracle: &'a SurfaceOracle,
    centre: Point3,
    radius: f64,
    cells: Vec<Cell>,
    cumulative: Vec<f64>,
}

impl<'a> BallSampler<'a> {
    pub fn new(oracle: &'a SurfaceOracle, centre: Point3, radius: f64) -> Option<Self> {
        let cells: Vec<Cell> = oracle.ball_cells(centre, radius).into_iter().map(|(c, _)| c).collect();
        let mut cumulative = Vec::with_capacity(cells.len());
        let mut acc = 0.0;
        for c in &cells {
            acc += oracle.cell_area(c);
            cumulative.push(acc);
        }
        if cells.is_empty() || acc <= 0.0 {
            return None;
        }
        let s = BallSampler { oracle, centre, radius, cells, cumulative };
        // make sure the cover really meets the ball
        let mut probe = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
        s.try_sample(&mut probe, 100_000).map(|_| s)
    }

    fn try_sample<R: Rng + ?Sized>(&self, rng: &mut R, budget: usize) -> Option<SurfacePoint> {
        let total = *self.cumulative.last().unwrap();
        for _ in 0..budget {
            let x = rng.random::<f64>() * total;
            let k = self.cumulative.partition_point(|&c| c <= x).min(self.cells.len() - 1);
            let p = self.oracle.sample_cell(&self.cells[k], rng);
            if p.position.dist(self.centre) <= self.radius {
                return Some(p);
            }
        }
        None
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SurfacePoint {
        self.try_sample(rng, usize::MAX).expect("non-empty patch")
    }
}

impl BallSampler<'_> {
    /// Total area of the covering cells (an upper bound on the patch area).
    pub fn cover_area(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{shapes, AnalyticSurface};
    use crate::geom::Vec3;
    use std::f64::consts::PI;

    fn accept_fraction(s: &BallSampler, oracle: &SurfaceOracle, n: usize) -> f64 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let total = s.cover_area();
        let mut hit = 0;
        for _ in 0..n {
            let x = rng.random::<f64>() * total;
            let k = s.cumulative.partition_point(|&c| c <= x).min(s.cells.len() - 1);
            if oracle.sample_cell(&s.cells[k], &mut rng).position.dist(s.centre) <= s.radius {
                hit += 1;
            }
        }
        hit as f64 / n as f64
    }

    #[test]
    fn sphere_cap_area() {
        let o = SurfaceOracle::from(AnalyticSurface::sphere(1.0).unwrap());
        let c = Vec3::new(0.3, -0.4, 0.0).normalized();
        for r in [0.05, 0.3, 1.0] {
            let s = BallSampler::new(&o, c, r).unwrap();
            let est = s.cover_area() * accept_fraction(&s, &o, 40_000);
            assert!((est / (PI * r * r) - 1.0).abs() < 0.03, "r={r} est={est}");
        }
    }

    #[test]
    fn cube_face_disc() {
        let o = SurfaceOracle::from(shapes::cube(1.0));
        let c = Vec3::new(0.05, -0.1, -0.5);
        let s = BallSampler::new(&o, c, 0.3).unwrap();
        let est = s.cover_area() * accept_fraction(&s, &o, 40_000);
        assert!((est / (PI * 0.09) - 1.0).abs() < 0.03, "est={est}");
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for p in o.sample_in_ball(c, 0.3, 200, &mut rng).unwrap() {
            assert!(p.position.dist(c) <= 0.3);
            assert!((p.position.z + 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_patch() {
        let o = SurfaceOracle::from(AnalyticSurface::sphere(1.0).unwrap());
        assert!(BallSampler::new(&o, Vec3::ZERO, 0.5).is_none());
        let m = SurfaceOracle::from(shapes::cube(1.0));
        assert!(BallSampler::new(&m, Vec3::ZERO, 0.4).is_none());
    }

    #[test]
    fn split_preserves_area() {
        let m = SurfaceOracle::from(shapes::icosphere(1, 1.0));
        let c = Cell::Tri { face: 3, bary: [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)] };
        let sum: f64 = m.split_cell(&c).iter().map(|k| m.cell_area(k)).sum();
        assert!((sum - m.cell_area(&c)).abs() < 1e-14);
        let t = SurfaceOracle::from(AnalyticSurface::torus(2.0, 0.5).unwrap());
        let cells = t.ball_cells(Vec3::new(2.5, 0.0, 0.0), 10.0);
        let area: f64 = cells.iter().map(|(k, _)| t.cell_area(k)).sum();
        assert!((area - 4.0 * PI * PI).abs() < 1e-6 * area);
    }
}
