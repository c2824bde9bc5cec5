//! Surfaces behind one oracle: analytic kinds and triangle meshes.

pub mod analytic;
pub mod bvh;
pub mod cover;
pub mod io;
pub mod mesh;
pub mod poly;
pub mod shapes;

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use analytic::AnalyticSurface;
pub use cover::{Cell, CellClass};
pub use io::{load_mesh, MeshFormat};
pub use mesh::TriMesh;

use crate::geom::{Point3, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error("malformed mesh file at line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("empty mesh")]
    EmptyMesh,
    #[error("non-finite coordinate ({0})")]
    NonFinite(String),
    #[error("surface has no interior")]
    NoInterior,
    #[error("invalid surface parameters: {0}")]
    InvalidParameters(String),
    #[error("{0}")]
    Io(String),
}

/// A point on the surface with its unit normal (inward when the orientation
/// is known).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub position: Point3,
    pub normal: Vec3,
}

#[derive(Debug, Clone)]
pub enum SurfaceOracle {
    Analytic(AnalyticSurface),
    Mesh(Arc<TriMesh>),
}

impl From<AnalyticSurface> for SurfaceOracle {
    fn from(s: AnalyticSurface) -> Self {
        SurfaceOracle::Analytic(s)
    }
}

impl From<TriMesh> for SurfaceOracle {
    fn from(m: TriMesh) -> Self {
        SurfaceOracle::Mesh(Arc::new(m))
    }
}

impl SurfaceOracle {
    pub fn total_area(&self) -> f64 {
        match self {
            SurfaceOracle::Analytic(s) => s.area(),
            SurfaceOracle::Mesh(m) => m.total_area(),
        }
    }

    pub fn diameter_bound(&self) -> f64 {
        match self {
            SurfaceOracle::Analytic(s) => s.diameter_bound(),
            SurfaceOracle::Mesh(m) => m.bounds().diagonal(),
        }
    }

    pub fn has_interior(&self) -> bool {
        match self {
            SurfaceOracle::Analytic(s) => s.has_interior(),
            SurfaceOracle::Mesh(m) => m.is_watertight(),
        }
    }

    /// Area-uniform sample.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> SurfacePoint {
        match self {
            SurfaceOracle::Analytic(s) => s.sample(rng),
            SurfaceOracle::Mesh(m) => m.sample(rng),
        }
    }

    /// Intersections of the segment `[a, b]` with the surface, sorted from `a`.
    pub fn segment_hits(&self, a: Point3, b: Point3) -> Vec<Point3> {
        match self {
            SurfaceOracle::Analytic(s) => s.segment_hits(a, b),
            SurfaceOracle::Mesh(m) => m.segment_hits(a, b),
        }
    }

    pub fn inside(&self, p: Point3) -> Result<bool, SurfaceError> {
        match self {
            SurfaceOracle::Analytic(s) => s.inside(p),
            SurfaceOracle::Mesh(m) => m.inside(p),
        }
    }

    pub fn closest_point(&self, p: Point3) -> SurfacePoint {
        match self {
            SurfaceOracle::Analytic(s) => s.closest_point(p),
            SurfaceOracle::Mesh(m) => m.closest_point(p),
        }
    }

    pub fn distance(&self, p: Point3) -> f64 {
        self.closest_point(p).position.dist(p)
    }
}

pub fn segment_hits(oracle: &SurfaceOracle, a: Point3, b: Point3) -> Vec<Point3> {
    oracle.segment_hits(a, b)
}

pub fn inside(oracle: &SurfaceOracle, p: Point3) -> Result<bool, SurfaceError> {
    oracle.inside(p)
}

pub fn sample_point<R: Rng + ?Sized>(oracle: &SurfaceOracle, rng: &mut R) -> SurfacePoint {
    oracle.sample_point(rng)
}
