//! The planar exotic model: a charged particle in the plane with a constant
//! non-commutative parameter `θ`, a perpendicular magnetic field `B(x)` and
//! an electric potential `V(x)`. Kept natively two-dimensional.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vec2;

/// A state `(x, p, t)` of the planar model.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanarPoint {
    pub x: Vec2,
    pub p: Vec2,
    pub t: f64,
}

impl PlanarPoint {
    pub fn new(x: Vec2, p: Vec2, t: f64) -> Self {
        PlanarPoint { x, p, t }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.p.is_finite() && self.t.is_finite()
    }

    /// Coordinates in the order `(x1, x2, p1, p2)`.
    pub fn to_array4(&self) -> [f64; 4] {
        [self.x.x, self.x.y, self.p.x, self.p.y]
    }

    pub fn from_array4(a: [f64; 4], t: f64) -> Self {
        PlanarPoint::new(Vec2::new(a[0], a[1]), Vec2::new(a[2], a[3]), t)
    }
}

type Scalar = Arc<dyn Fn(Vec2) -> f64 + Send + Sync>;
type Gradient = Arc<dyn Fn(Vec2) -> Vec2 + Send + Sync>;

/// A scalar function on the plane together with its gradient.
#[derive(Clone)]
pub struct ScalarField2 {
    label: String,
    value: Scalar,
    gradient: Gradient,
    uniform: bool,
}

impl fmt::Debug for ScalarField2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField2({})", self.label)
    }
}

impl ScalarField2 {
    pub fn constant(c: f64) -> Self {
        ScalarField2 {
            label: format!("constant({c})"),
            value: Arc::new(move |_| c),
            gradient: Arc::new(|_| Vec2::ZERO),
            uniform: true,
        }
    }

    /// `v0 + g·x`
    pub fn linear(v0: f64, g: Vec2) -> Self {
        ScalarField2 {
            label: format!("linear({v0}, {}, {})", g.x, g.y),
            value: Arc::new(move |x| v0 + g.dot(x)),
            gradient: Arc::new(move |_| g),
            uniform: g == Vec2::ZERO,
        }
    }

    /// `base + amplitude · exp(−|x − center|² / (2 width²))`
    pub fn gaussian(base: f64, amplitude: f64, center: Vec2, width: f64) -> Self {
        let w2 = width * width;
        ScalarField2 {
            label: format!("gaussian({base}, {amplitude}, {}, {}, {width})", center.x, center.y),
            value: Arc::new(move |x| {
                let d = x - center;
                base + amplitude * (-d.dot(d) / (2.0 * w2)).exp()
            }),
            gradient: Arc::new(move |x| {
                let d = x - center;
                d * (-amplitude / w2 * (-d.dot(d) / (2.0 * w2)).exp())
            }),
            uniform: amplitude == 0.0,
        }
    }

    /// Function with an analytic gradient.
    pub fn new<F, G>(label: impl Into<String>, value: F, gradient: G) -> Self
    where
        F: Fn(Vec2) -> f64 + Send + Sync + 'static,
        G: Fn(Vec2) -> Vec2 + Send + Sync + 'static,
    {
        ScalarField2 {
            label: label.into(),
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            uniform: false,
        }
    }

    /// Function whose gradient is taken by central differences.
    pub fn from_fn<F>(label: impl Into<String>, value: F) -> Self
    where
        F: Fn(Vec2) -> f64 + Send + Sync + 'static,
    {
        let value: Scalar = Arc::new(value);
        let v = value.clone();
        let gradient = move |x: Vec2| {
            let h = 1e-5 * x.norm().max(1.0);
            let dx = Vec2::new(h, 0.0);
            let dy = Vec2::new(0.0, h);
            Vec2::new(
                (v(x + dx) - v(x - dx)) / (2.0 * h),
                (v(x + dy) - v(x - dy)) / (2.0 * h),
            )
        };
        ScalarField2 {
            label: label.into(),
            value,
            gradient: Arc::new(gradient),
            uniform: false,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn value(&self, x: Vec2) -> f64 {
        (self.value)(x)
    }

    pub fn gradient(&self, x: Vec2) -> Vec2 {
        (self.gradient)(x)
    }

    /// True only when the field is known to be constant.
    pub fn is_uniform(&self) -> bool {
        self.uniform
    }
}

/// Planar exotic particle of mass `m` and charge `e` with non-commutative
/// parameter `θ`.
#[derive(Debug, Clone)]
pub struct PlanarModel {
    m: f64,
    e: f64,
    theta: f64,
    b: ScalarField2,
    v: ScalarField2,
}

/// Builds the planar exotic model; `m` must be positive and finite.
pub fn exotic_planar(m: f64, e: f64, theta: f64, b: ScalarField2, v: ScalarField2) -> Result<PlanarModel> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::Precondition(format!("mass must be positive, got {m}")));
    }
    if !(e.is_finite() && theta.is_finite()) {
        return Err(Error::Precondition("couplings must be finite".into()));
    }
    Ok(PlanarModel { m, e, theta, b, v })
}

impl PlanarModel {
    pub fn mass(&self) -> f64 {
        self.m
    }

    pub fn charge(&self) -> f64 {
        self.e
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn b_field(&self) -> &ScalarField2 {
        &self.b
    }

    pub fn potential(&self) -> &ScalarField2 {
        &self.v
    }

    pub fn b_at(&self, x: Vec2) -> f64 {
        self.b.value(x)
    }

    /// `E = −∇V`
    pub fn e_field(&self, x: Vec2) -> Vec2 {
        -self.v.gradient(x)
    }

    /// `m* = m(1 − eθB(x))`
    pub fn effective_mass(&self, x: Vec2) -> f64 {
        self.m * (1.0 - self.e * self.theta * self.b_at(x))
    }

    /// `1/(eθ)`, absent when `eθ = 0`.
    pub fn b_crit(&self) -> Option<f64> {
        let et = self.e * self.theta;
        (et != 0.0).then(|| 1.0 / et)
    }

    /// `|p|²/(2m) + eV(x)`
    pub fn hamiltonian(&self, pt: &PlanarPoint) -> f64 {
        pt.p.dot(pt.p) / (2.0 * self.m) + self.e * self.v.value(pt.x)
    }
}
