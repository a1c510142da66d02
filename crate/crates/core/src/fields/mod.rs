//! Field models: the local tensor data entering the evolution-space 2-form.
//!
//! A [`FieldModel`] is an immutable, shareable bundle of a pure evaluator
//! `PhasePoint → FieldSample`, named couplings and the loci where the
//! evaluator is undefined. Evaluating at an excluded point is an error, so a
//! NaN never leaks out of a model.

mod closure;
mod planar;
mod quadrature;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::souriau::PhasePoint;

pub use closure::{closure_residuals, closure_residuals_extrapolated, ClosureResidual};
pub use planar::{exotic_planar, PlanarModel, PlanarPoint, ScalarField2};
pub use quadrature::{flux_integral, gauss_legendre};

/// All local field data at one point of evolution space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FieldSample {
    /// Electric field.
    pub e_field: Vec3,
    /// Magnetic field (the charge coupling is applied at assembly).
    pub b_field: Vec3,
    /// Dual magnetic field living in momentum space.
    pub kappa: Vec3,
    /// Velocity-relation vector.
    pub g: Vec3,
    /// Diagonal of the mass-correction matrix `Q`.
    pub mu: Vec3,
    /// Axial vector of the antisymmetric mass correction `Q_A`.
    pub q: Vec3,
}

impl FieldSample {
    pub fn is_finite(&self) -> bool {
        [self.e_field, self.b_field, self.kappa, self.g, self.mu, self.q]
            .iter()
            .all(|v| v.is_finite())
    }

    /// `det(1 − Q)`; regularity of the kernel equations needs it non-zero.
    pub fn one_minus_q_det(&self) -> f64 {
        (1.0 - self.mu.x) * (1.0 - self.mu.y) * (1.0 - self.mu.z)
    }

    /// Sample with every field set to zero and `g = p`.
    pub fn free(p: Vec3) -> Self {
        FieldSample { g: p, ..Default::default() }
    }
}

/// A locus where a model's evaluator is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exclusion {
    /// `r = 0`
    PositionOrigin,
    /// `p = 0`
    MomentumOrigin,
}

impl Exclusion {
    /// Euclidean distance of the point from the locus.
    pub fn distance(&self, point: &PhasePoint) -> f64 {
        match self {
            Exclusion::PositionOrigin => point.r.norm(),
            Exclusion::MomentumOrigin => point.p.norm(),
        }
    }
}

impl fmt::Display for Exclusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exclusion::PositionOrigin => f.write_str("r = 0"),
            Exclusion::MomentumOrigin => f.write_str("p = 0"),
        }
    }
}

/// Which closed-form machinery a model supports downstream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    /// Magnetic monopole `r/|r|³` (coupling `e`) and dual monopole
    /// `θ p/|p|³`.
    DoubleMonopole { e: f64, theta: f64 },
    /// Dual monopole `θ p/|p|³` and a uniform electric field, unit charge.
    MomentumMonopole { theta: f64, e_field: Vec3 },
    /// Uniform electric and magnetic fields with charge `e`.
    Uniform { e: f64, e_field: Vec3, b_field: Vec3 },
    /// User model; only the kernel route applies.
    Custom,
}

pub type Evaluator = Arc<dyn Fn(&PhasePoint) -> FieldSample + Send + Sync>;

#[derive(Clone)]
pub struct FieldModel {
    name: String,
    params: BTreeMap<String, f64>,
    kind: ModelKind,
    exclusions: Vec<Exclusion>,
    evaluator: Evaluator,
}

impl fmt::Debug for FieldModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldModel")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("kind", &self.kind)
            .field("exclusions", &self.exclusions)
            .finish_non_exhaustive()
    }
}

impl FieldModel {
    /// A user-supplied model. `e` is the charge coupling used at assembly.
    pub fn custom<F>(name: impl Into<String>, e: f64, exclusions: Vec<Exclusion>, evaluator: F) -> Self
    where
        F: Fn(&PhasePoint) -> FieldSample + Send + Sync + 'static,
    {
        let mut params = BTreeMap::new();
        params.insert("e".to_string(), e);
        FieldModel {
            name: name.into(),
            params,
            kind: ModelKind::Custom,
            exclusions,
            evaluator: Arc::new(evaluator),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn exclusions(&self) -> &[Exclusion] {
        &self.exclusions
    }

    /// Charge coupling multiplying `E` and `B` in the 2-form.
    pub fn coupling(&self) -> f64 {
        self.param("e").unwrap_or(0.0)
    }

    /// Dual monopole strength, zero for models without one.
    pub fn theta(&self) -> f64 {
        self.param("theta").unwrap_or(0.0)
    }

    /// Smallest distance from the point to any excluded locus.
    pub fn exclusion_distance(&self, point: &PhasePoint) -> f64 {
        self.exclusions
            .iter()
            .map(|x| x.distance(point))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn sample(&self, point: &PhasePoint) -> Result<FieldSample> {
        if !point.is_finite() {
            return Err(Error::SingularPoint(format!("non-finite point {point:?}")));
        }
        for x in &self.exclusions {
            if x.distance(point) == 0.0 {
                return Err(Error::SingularPoint(format!("{} evaluated at excluded locus {x}", self.name)));
            }
        }
        let s = (self.evaluator)(point);
        if !s.is_finite() {
            return Err(Error::SingularPoint(format!(
                "{} produced non-finite fields at {point:?}",
                self.name
            )));
        }
        Ok(s)
    }

    /// Whether `H = |p|²/2` is a constant of motion.
    pub fn conserves_energy(&self) -> bool {
        match self.kind {
            ModelKind::DoubleMonopole { .. } => true,
            ModelKind::MomentumMonopole { e_field, .. } => e_field == Vec3::ZERO,
            ModelKind::Uniform { e, e_field, .. } => e == 0.0 || e_field == Vec3::ZERO,
            ModelKind::Custom => false,
        }
    }

    /// Whether the total angular momentum `r×p − θ p̂ − e r̂` is conserved.
    pub fn conserves_angular_momentum(&self) -> bool {
        match self.kind {
            ModelKind::DoubleMonopole { .. } => true,
            ModelKind::MomentumMonopole { e_field, .. } => e_field == Vec3::ZERO,
            ModelKind::Uniform { e, e_field, b_field } => {
                e == 0.0 || (e_field == Vec3::ZERO && b_field == Vec3::ZERO)
            }
            ModelKind::Custom => false,
        }
    }

    /// Position-monopole coupling and dual-monopole strength used by the
    /// angular momentum and effective mass diagnostics.
    pub fn monopole_couplings(&self) -> (f64, f64) {
        match self.kind {
            ModelKind::DoubleMonopole { e, theta } => (e, theta),
            ModelKind::MomentumMonopole { theta, .. } => (0.0, theta),
            _ => (0.0, 0.0),
        }
    }
}

/// Magnetic monopole `B = r/|r|³` with charge coupling `e` together with a
/// momentum-space monopole `κ = θ p/|p|³`.
pub fn double_monopole(e: f64, theta: f64) -> Result<FieldModel> {
    if e == 0.0 && theta == 0.0 {
        return Err(Error::Precondition("double monopole needs e ≠ 0 or θ ≠ 0".into()));
    }
    if !(e.is_finite() && theta.is_finite()) {
        return Err(Error::Precondition("couplings must be finite".into()));
    }
    let mut params = BTreeMap::new();
    params.insert("e".to_string(), e);
    params.insert("theta".to_string(), theta);
    Ok(FieldModel {
        name: "double_monopole".into(),
        params,
        kind: ModelKind::DoubleMonopole { e, theta },
        exclusions: vec![Exclusion::PositionOrigin, Exclusion::MomentumOrigin],
        evaluator: Arc::new(move |pt: &PhasePoint| FieldSample {
            b_field: monopole(pt.r, 1.0),
            kappa: monopole(pt.p, theta),
            g: pt.p,
            ..Default::default()
        }),
    })
}

/// Momentum-space monopole of strength `θ` with a uniform electric field
/// acting on a unit charge.
pub fn momentum_monopole_uniform_e(theta: f64, e_field: Vec3) -> FieldModel {
    let mut params = BTreeMap::new();
    params.insert("e".to_string(), 1.0);
    params.insert("theta".to_string(), theta);
    params.insert("E1".to_string(), e_field.x);
    params.insert("E2".to_string(), e_field.y);
    params.insert("E3".to_string(), e_field.z);
    FieldModel {
        name: "momentum_monopole_uniform_e".into(),
        params,
        kind: ModelKind::MomentumMonopole { theta, e_field },
        exclusions: vec![Exclusion::MomentumOrigin],
        evaluator: Arc::new(move |pt: &PhasePoint| FieldSample {
            e_field,
            kappa: if theta == 0.0 { Vec3::ZERO } else { monopole(pt.p, theta) },
            g: pt.p,
            ..Default::default()
        }),
    }
}

/// Uniform `E` and `B` acting on charge `e`, no dual field.
pub fn uniform(e: f64, e_field: Vec3, b_field: Vec3) -> FieldModel {
    let mut params = BTreeMap::new();
    params.insert("e".to_string(), e);
    for (k, v) in [
        ("E1", e_field.x),
        ("E2", e_field.y),
        ("E3", e_field.z),
        ("B1", b_field.x),
        ("B2", b_field.y),
        ("B3", b_field.z),
    ] {
        params.insert(k.to_string(), v);
    }
    FieldModel {
        name: "uniform".into(),
        params,
        kind: ModelKind::Uniform { e, e_field, b_field },
        exclusions: vec![],
        evaluator: Arc::new(move |pt: &PhasePoint| FieldSample {
            e_field,
            b_field,
            g: pt.p,
            ..Default::default()
        }),
    }
}

/// No fields at all.
pub fn free() -> FieldModel {
    let mut m = uniform(0.0, Vec3::ZERO, Vec3::ZERO);
    m.name = "free".into();
    m
}

/// `strength · v/|v|³`; callers guarantee `v ≠ 0`.
pub(crate) fn monopole(v: Vec3, strength: f64) -> Vec3 {
    let n = v.norm();
    v * (strength / (n * n * n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(r: [f64; 3], p: [f64; 3]) -> PhasePoint {
        PhasePoint::new(Vec3::from_array(r), Vec3::from_array(p), 0.0)
    }

    #[test]
    fn double_monopole_unit_point() {
        let m = double_monopole(1.0, 0.7).unwrap();
        let s = m.sample(&pt([1.0, 0.0, 0.0], [0.0, 1.0, 0.0])).unwrap();
        assert_eq!(s.b_field, Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(s.kappa, Vec3::new(0.0, 0.7, 0.0));
        assert_eq!(s.e_field, Vec3::ZERO);
        assert_eq!(s.g, Vec3::new(0.0, 1.0, 0.0));
        let s = m.sample(&pt([0.0, 0.0, 2.0], [1.0, 0.0, 0.0])).unwrap();
        assert_eq!(s.b_field, Vec3::new(0.0, 0.0, 0.25));
    }

    #[test]
    fn excluded_points_are_errors() {
        let m = double_monopole(1.0, 1.0).unwrap();
        assert!(matches!(m.sample(&pt([0.0; 3], [1.0, 0.0, 0.0])), Err(Error::SingularPoint(_))));
        assert!(matches!(m.sample(&pt([1.0, 0.0, 0.0], [0.0; 3])), Err(Error::SingularPoint(_))));
        assert!(double_monopole(0.0, 0.0).is_err());
        let mm = momentum_monopole_uniform_e(0.3, Vec3::new(0.0, 1.0, 0.0));
        assert!(mm.sample(&pt([0.0; 3], [0.0; 3])).is_err());
        assert!(mm.sample(&pt([0.0; 3], [1.0, 0.0, 0.0])).is_ok());
    }

    #[test]
    fn theta_zero_switches_off_dual_field() {
        let m = double_monopole(1.0, 0.0).unwrap();
        let s = m.sample(&pt([0.3, -1.0, 2.0], [1.5, 0.2, -0.7])).unwrap();
        assert_eq!(s.kappa, Vec3::ZERO);
        let mm = momentum_monopole_uniform_e(0.0, Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(mm.sample(&pt([0.0; 3], [0.1, 0.0, 0.0])).unwrap().kappa, Vec3::ZERO);
    }

    #[test]
    fn unit_momentum_gives_kappa_modulus_theta() {
        let mm = momentum_monopole_uniform_e(-0.4, Vec3::new(1.0, 2.0, 3.0));
        let p = Vec3::new(0.6, 0.0, 0.8);
        let s = mm.sample(&pt([1.0, 1.0, 1.0], p.to_array())).unwrap();
        assert!((s.kappa.norm() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn evaluation_is_bit_identical() {
        let m = double_monopole(1.3, -0.4).unwrap();
        let p = pt([0.1234, -2.5, 0.77], [3.1, 0.002, -1.0]);
        let a = m.sample(&p).unwrap();
        for _ in 0..10 {
            assert_eq!(a, m.sample(&p).unwrap());
        }
    }

    #[test]
    fn custom_model_nan_is_reported() {
        let m = FieldModel::custom("bad", 1.0, vec![], |pt: &PhasePoint| FieldSample {
            b_field: Vec3::new(1.0 / pt.r.x, 0.0, 0.0),
            g: pt.p,
            ..Default::default()
        });
        assert!(m.sample(&pt([0.0, 1.0, 0.0], [1.0, 0.0, 0.0])).is_err());
    }
}
