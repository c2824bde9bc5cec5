//! The four-point curvature integrands.
//!
//! All kinds map degenerate quadruples to 0 instead of failing, so Monte-Carlo
//! integration never aborts on a measure-zero configuration.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{circumsphere_radius, point_plane_distance, simplex_measures, Tetra};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrandError {
    #[error("invalid integrand spec: {0}")]
    InvalidSpec(String),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
}

/// Mean of three distances used by the Léger-type integrand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mean {
    #[default]
    Geometric,
    Arithmetic,
    Min,
    Max,
}

impl Mean {
    pub fn eval(self, a: f64, b: f64, c: f64) -> f64 {
        match self {
            Mean::Geometric => (a * b * c).cbrt(),
            Mean::Arithmetic => (a + b + c) / 3.0,
            Mean::Min => a.min(b).min(c),
            Mean::Max => a.max(b).max(c),
        }
    }
}

/// One member of the integrand family. Serializes as
/// `{"kind": "...", "mean": "...", "alpha": x, "s": x}` with only the fields
/// the kind needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub enum IntegrandSpec {
    /// `V / (A diam²)`.
    Menger,
    /// Inverse circumsphere radius.
    Circumsphere,
    /// `dist(ξ, ⟨x,y,z⟩) / M(|ξ-x|, |ξ-y|, |ξ-z|)^alpha` with ξ the fourth vertex.
    Leger { mean: Mean, alpha: f64 },
    /// `h_min / diam^(2+s)`.
    Scaled { s: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Kind {
    Menger,
    Circumsphere,
    Leger,
    Scaled,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mean: Option<Mean>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    s: Option<f64>,
}

impl TryFrom<RawSpec> for IntegrandSpec {
    type Error = IntegrandError;

    fn try_from(raw: RawSpec) -> Result<Self, Self::Error> {
        let unexpected = |field: &str| {
            Err(IntegrandError::InvalidSpec(format!(
                "field `{field}` is not used by kind {:?}",
                raw.kind
            )))
        };
        match raw.kind {
            Kind::Menger | Kind::Circumsphere => {
                if raw.mean.is_some() {
                    return unexpected("mean");
                }
                if raw.alpha.is_some() {
                    return unexpected("alpha");
                }
                if raw.s.is_some() {
                    return unexpected("s");
                }
                Ok(if raw.kind == Kind::Menger {
                    IntegrandSpec::Menger
                } else {
                    IntegrandSpec::Circumsphere
                })
            }
            Kind::Leger => {
                if raw.s.is_some() {
                    return unexpected("s");
                }
                let alpha = raw
                    .alpha
                    .ok_or_else(|| IntegrandError::InvalidSpec("leger requires `alpha`".into()))?;
                IntegrandSpec::leger(raw.mean.unwrap_or_default(), alpha)
            }
            Kind::Scaled => {
                if raw.mean.is_some() {
                    return unexpected("mean");
                }
                if raw.alpha.is_some() {
                    return unexpected("alpha");
                }
                let s = raw
                    .s
                    .ok_or_else(|| IntegrandError::InvalidSpec("scaled requires `s`".into()))?;
                IntegrandSpec::scaled(s)
            }
        }
    }
}

impl From<IntegrandSpec> for RawSpec {
    fn from(spec: IntegrandSpec) -> Self {
        let mut raw = RawSpec { kind: Kind::Menger, mean: None, alpha: None, s: None };
        match spec {
            IntegrandSpec::Menger => {}
            IntegrandSpec::Circumsphere => raw.kind = Kind::Circumsphere,
            IntegrandSpec::Leger { mean, alpha } => {
                raw.kind = Kind::Leger;
                raw.mean = Some(mean);
                raw.alpha = Some(alpha);
            }
            IntegrandSpec::Scaled { s } => {
                raw.kind = Kind::Scaled;
                raw.s = Some(s);
            }
        }
        raw
    }
}

impl IntegrandSpec {
    pub fn leger(mean: Mean, alpha: f64) -> Result<Self, IntegrandError> {
        if !(alpha > 1.0 && alpha.is_finite()) {
            return Err(IntegrandError::OutOfRange(format!("alpha = {alpha} must exceed 1")));
        }
        Ok(IntegrandSpec::Leger { mean, alpha })
    }

    pub fn scaled(s: f64) -> Result<Self, IntegrandError> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(IntegrandError::OutOfRange(format!("s = {s} must be positive")));
        }
        Ok(IntegrandSpec::Scaled { s })
    }

    pub fn from_json(text: &str) -> Result<Self, IntegrandError> {
        serde_json::from_str(text).map_err(|e| IntegrandError::InvalidSpec(e.to_string()))
    }

    /// Exponent `k` with `eval(λT) = λ^k eval(T)`.
    pub fn homogeneity(&self) -> f64 {
        match *self {
            IntegrandSpec::Menger | IntegrandSpec::Circumsphere => -1.0,
            IntegrandSpec::Leger { alpha, .. } => 1.0 - alpha,
            IntegrandSpec::Scaled { s } => -(1.0 + s),
        }
    }

    pub fn eval(&self, t: &Tetra) -> f64 {
        eval(self, t)
    }
}

pub fn eval(spec: &IntegrandSpec, t: &Tetra) -> f64 {
    match *spec {
        IntegrandSpec::Menger => menger(t),
        IntegrandSpec::Circumsphere => circumsphere_radius(t).map(|r| 1.0 / r).unwrap_or(0.0),
        IntegrandSpec::Leger { mean, alpha } => leger(t, mean, alpha),
        IntegrandSpec::Scaled { s } => {
            let m = simplex_measures(t);
            if m.is_coplanar() {
                0.0
            } else {
                m.min_height / m.diameter.powf(2.0 + s)
            }
        }
    }
}

/// `V / (A diam²)`, 0 for coplanar quadruples.
pub fn menger(t: &Tetra) -> f64 {
    let m = simplex_measures(t);
    if m.is_coplanar() {
        0.0
    } else {
        m.volume / (m.total_area * m.diameter * m.diameter)
    }
}

/// The same quantity written through cross products of edge vectors
/// `z_i = x_i - x_0`:
/// `|z3·(z1×z2)| / (3 [|z1×z2| + |z2×z3| + |z1×z3| + |(z2-z1)×(z3-z2)|] diam²)`.
pub fn menger_cross_product_form(t: &Tetra) -> f64 {
    let v = &t.0;
    let (z1, z2, z3) = (v[1] - v[0], v[2] - v[0], v[3] - v[0]);
    let det = z3.dot(z1.cross(z2)).abs();
    let faces = z1.cross(z2).norm()
        + z2.cross(z3).norm()
        + z1.cross(z3).norm()
        + (z2 - z1).cross(z3 - z2).norm();
    let d = t.diameter();
    if det == 0.0 || faces == 0.0 {
        return 0.0;
    }
    det / (3.0 * faces * d * d)
}

fn leger(t: &Tetra, mean: Mean, alpha: f64) -> f64 {
    let [x, y, z, xi] = t.0;
    let (a, b, c) = (xi.dist(x), xi.dist(y), xi.dist(z));
    if a == 0.0 || b == 0.0 || c == 0.0 {
        return 0.0;
    }
    match point_plane_distance(xi, x, y, z) {
        Ok(h) => h / mean.eval(a, b, c).powf(alpha),
        Err(_) => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaBounds {
    pub voluminous_bound: f64,
    pub wide_bound: f64,
}

/// Lower bounds for the integrand: `θ⁴/(2500 d)` on voluminous tetrahedra and
/// `θ³κ/(2500 d)` on tetrahedra over a wide base with apex height `≥ κd`.
pub fn lemma_bounds(theta: f64, kappa: f64, d: f64) -> Result<LemmaBounds, IntegrandError> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(IntegrandError::OutOfRange(format!("theta = {theta} not in (0,1)")));
    }
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(IntegrandError::OutOfRange(format!("kappa = {kappa} not in (0,1]")));
    }
    if !(d > 0.0 && d.is_finite()) {
        return Err(IntegrandError::OutOfRange(format!("d = {d} must be positive")));
    }
    Ok(LemmaBounds {
        voluminous_bound: theta.powi(4) / (2500.0 * d),
        wide_bound: theta.powi(3) * kappa / (2500.0 * d),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec3;
    use approx::assert_relative_eq;

    fn regular() -> Tetra {
        let s = 0.5;
        let h = s / 2f64.sqrt();
        Tetra::new(
            Vec3::new(s, 0.0, -h),
            Vec3::new(-s, 0.0, -h),
            Vec3::new(0.0, s, h),
            Vec3::new(0.0, -s, h),
        )
    }

    fn coplanar() -> Tetra {
        Tetra::new(Vec3::ZERO, Vec3::X, Vec3::Y, Vec3::new(1.0, 1.0, 0.0))
    }

    #[test]
    fn regular_tetra_value() {
        let k = menger(&regular());
        assert_relative_eq!(k, 2f64.sqrt() / (12.0 * 3f64.sqrt()), max_relative = 1e-12);
        assert_relative_eq!(k, 0.0680414, epsilon = 1e-7);
        assert_relative_eq!(menger_cross_product_form(&regular()), k, max_relative = 1e-12);
    }

    #[test]
    fn coplanar_is_zero_for_every_kind() {
        let specs = [
            IntegrandSpec::Menger,
            IntegrandSpec::Circumsphere,
            IntegrandSpec::leger(Mean::Geometric, 3.0).unwrap(),
            IntegrandSpec::scaled(0.5).unwrap(),
        ];
        for s in specs {
            assert_eq!(s.eval(&coplanar()), 0.0, "{s:?}");
        }
    }

    #[test]
    fn inscribed_points_have_unit_curvature() {
        let d = |x: f64, y: f64, z: f64| Vec3::new(x, y, z).normalized();
        let t = Tetra::new(d(1.0, 0.2, 0.1), d(-0.3, 1.0, 0.5), d(0.1, -0.7, 0.9), d(-0.5, -0.5, -0.8));
        assert_relative_eq!(IntegrandSpec::Circumsphere.eval(&t), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn leger_in_plane_apex() {
        let spec = IntegrandSpec::leger(Mean::Geometric, 3.0).unwrap();
        let t = Tetra::new(Vec3::ZERO, Vec3::X, Vec3::Y, Vec3::new(0.4, 0.3, 0.0));
        assert_eq!(spec.eval(&t), 0.0);
        let t = Tetra::new(Vec3::ZERO, Vec3::X, Vec3::Y, Vec3::X);
        assert_eq!(spec.eval(&t), 0.0);
    }

    #[test]
    fn leger_is_not_symmetric_in_apex() {
        let spec = IntegrandSpec::leger(Mean::Geometric, 3.0).unwrap();
        let t = Tetra::new(Vec3::ZERO, Vec3::X, Vec3::Y, Vec3::Z * 2.0);
        let a = spec.eval(&t);
        let b = spec.eval(&t.permuted([3, 1, 2, 0]));
        assert_relative_eq!(a, 0.2, max_relative = 1e-12);
        assert_relative_eq!(b, 1.0 / 3.0, max_relative = 1e-12);
        assert!((a - b).abs() > 0.1 * a.max(b), "{a} {b}");
    }

    #[test]
    fn spec_json_round_trip() {
        let cases = [
            (r#"{"kind":"menger"}"#, IntegrandSpec::Menger),
            (r#"{"kind":"circumsphere"}"#, IntegrandSpec::Circumsphere),
            (r#"{"kind":"leger","alpha":3}"#, IntegrandSpec::Leger { mean: Mean::Geometric, alpha: 3.0 }),
            (r#"{"kind":"leger","mean":"max","alpha":2.5}"#, IntegrandSpec::Leger { mean: Mean::Max, alpha: 2.5 }),
            (r#"{"kind":"scaled","s":0.5}"#, IntegrandSpec::Scaled { s: 0.5 }),
        ];
        for (text, spec) in cases {
            let parsed = IntegrandSpec::from_json(text).unwrap();
            assert_eq!(parsed, spec);
            let again = IntegrandSpec::from_json(&serde_json::to_string(&parsed).unwrap()).unwrap();
            assert_eq!(again, spec);
        }
        for bad in [
            r#"{"kind":"menger","alpha":3}"#,
            r#"{"kind":"leger"}"#,
            r#"{"kind":"leger","alpha":1.0}"#,
            r#"{"kind":"scaled"}"#,
            r#"{"kind":"scaled","s":-1}"#,
            r#"{"kind":"circumsphere","mean":"min"}"#,
            r#"{"kind":"polar"}"#,
            r#"{"kind":"menger","extra":1}"#,
        ] {
            assert!(IntegrandSpec::from_json(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn bounds_arithmetic() {
        let b = lemma_bounds(0.8, 0.5, 1.0).unwrap();
        assert_relative_eq!(b.voluminous_bound, 1.6384e-4, max_relative = 1e-12);
        assert_relative_eq!(b.wide_bound, 0.512 * 0.5 / 2500.0, max_relative = 1e-12);
        assert!(lemma_bounds(1.0, 0.5, 1.0).is_err());
        assert!(lemma_bounds(0.5, 0.0, 1.0).is_err());
        assert!(lemma_bounds(0.5, 0.5, 0.0).is_err());
    }

    #[test]
    fn means_are_ordered() {
        for m in [Mean::Geometric, Mean::Arithmetic, Mean::Min, Mean::Max] {
            let v = m.eval(1.0, 2.0, 4.0);
            assert!((1.0..=4.0).contains(&v));
        }
        assert_relative_eq!(Mean::Geometric.eval(1.0, 2.0, 4.0), 2.0, max_relative = 1e-15);
    }
}
