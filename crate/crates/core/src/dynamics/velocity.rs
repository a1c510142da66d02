//! Velocity fields and per-sample diagnostics for the built-in and custom
//! models.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{FieldModel, ModelKind};
use crate::linalg::{axial_to_matrix, levi_civita, Vec3, DEFAULT_RANK_TOL};
use crate::poisson::{cosymplectic_double_monopole_numerator, cosymplectic_general, mstar};
use crate::souriau::{effective_mass_matrix, kernel_velocity, sigma_at, KernelSolution, PhasePoint};

/// How the phase velocity is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityRoute {
    /// Closed form for built-in models, kernel of `σ` otherwise.
    #[default]
    Auto,
    ClosedForm,
    Kernel,
    /// `ξ̇ = P ∇H` with the model's Poisson tensor.
    Hamiltonian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Route {
    ClosedForm,
    Kernel,
    Hamiltonian,
}

pub(crate) fn resolve(model: &FieldModel, route: VelocityRoute) -> Result<Route> {
    let custom = matches!(model.kind(), ModelKind::Custom);
    match route {
        VelocityRoute::Auto if custom => Ok(Route::Kernel),
        VelocityRoute::Auto | VelocityRoute::ClosedForm if !custom => Ok(Route::ClosedForm),
        VelocityRoute::Kernel => Ok(Route::Kernel),
        VelocityRoute::Hamiltonian if !custom => Ok(Route::Hamiltonian),
        _ => Err(Error::InvalidOptions(format!(
            "velocity route {route:?} is not available for model {}",
            model.name()
        ))),
    }
}

fn split(v: Vec3, w: Vec3) -> [f64; 6] {
    [v.x, v.y, v.z, w.x, w.y, w.z]
}

/// Regular numerator `M*·ξ̇` and `M*` of the double monopole.
pub(crate) fn dm_numerator(pt: &PhasePoint, e: f64, theta: f64, route: Route) -> Result<([f64; 6], f64)> {
    let m = mstar(pt, e, theta);
    let n = match route {
        Route::Hamiltonian => {
            let num = cosymplectic_double_monopole_numerator(pt, e, theta)?;
            let grad = [0.0, 0.0, 0.0, pt.p.x, pt.p.y, pt.p.z];
            let mut out = [0.0; 6];
            for (i, o) in out.iter_mut().enumerate() {
                for (j, g) in grad.iter().enumerate() {
                    *o += num.get(i, j) * g;
                }
            }
            out
        }
        _ => {
            if pt.r == Vec3::ZERO || pt.p == Vec3::ZERO {
                return Err(Error::SingularPoint(format!("double monopole evaluated at {pt:?}")));
            }
            let (r, p) = (pt.r.norm(), pt.p.norm());
            let rp3 = (r * p).powi(3);
            let rdot = pt.p * rp3 - pt.r * (e * theta * p * p);
            let pdot = pt.p.cross(pt.r) * (e * p * p * p);
            split(rdot, pdot)
        }
    };
    Ok((n, m))
}

/// `dξ/dt` at the point along the chosen route.
pub(crate) fn velocity(model: &FieldModel, pt: &PhasePoint, route: Route) -> Result<[f64; 6]> {
    match (route, model.kind()) {
        (Route::Kernel, _) => {
            let s = sigma_at(model, pt)?;
            match kernel_velocity(&s, DEFAULT_RANK_TOL) {
                KernelSolution::Regular(v) => Ok(v.to_array6()),
                KernelSolution::Singular(rep) => Err(Error::SingularPoint(format!(
                    "kernel of dimension {} (time component {:e}) at {pt:?}",
                    rep.kernel_dim, rep.time_component
                ))),
            }
        }
        (_, ModelKind::DoubleMonopole { e, theta }) => {
            let (n, m) = dm_numerator(pt, e, theta, route)?;
            if m == 0.0 {
                return Err(Error::DegenerateMass(format!("M* = 0 at {pt:?}")));
            }
            Ok(n.map(|x| x / m))
        }
        (Route::ClosedForm, ModelKind::MomentumMonopole { theta, e_field }) => {
            model.sample(pt)?;
            let kappa = pt.p * (theta / pt.p.norm().powi(3));
            let rdot = if theta == 0.0 { pt.p } else { pt.p - e_field.cross(kappa) };
            Ok(split(rdot, e_field))
        }
        (Route::ClosedForm, ModelKind::Uniform { e, e_field, b_field }) => {
            Ok(split(pt.p, (e_field + pt.p.cross(b_field)) * e))
        }
        (Route::Hamiltonian, _) => {
            let s = model.sample(pt)?;
            let e = model.coupling();
            let b = axial_to_matrix(s.b_field * e);
            let k = levi_civita(s.kappa);
            let structure = cosymplectic_general(&Matrix3::zeros(), &b, &k)?;
            let gr = s.e_field * (-e);
            Ok(structure.apply(&split(gr, s.g)))
        }
        (Route::ClosedForm, ModelKind::Custom) => {
            Err(Error::InvalidOptions("custom models have no closed-form velocity".into()))
        }
    }
}

/// Energy monitored along trajectories: `|p|²/2 − eE·r` for uniform
/// electric fields, `|p|²/2` otherwise.
pub fn hamiltonian(model: &FieldModel, pt: &PhasePoint) -> f64 {
    let kin = 0.5 * pt.p.norm_sq();
    match model.kind() {
        ModelKind::MomentumMonopole { e_field, .. } => kin - e_field.dot(pt.r),
        ModelKind::Uniform { e, e_field, .. } => kin - e * e_field.dot(pt.r),
        _ => kin,
    }
}

/// `r×p − θ p̂ − e r̂` with the model's monopole couplings (kinetic angular
/// momentum when it has none).
pub fn total_angular_momentum(model: &FieldModel, pt: &PhasePoint) -> Vec3 {
    let (e, theta) = model.monopole_couplings();
    let hat = |v: Vec3| v.normalized().unwrap_or(Vec3::ZERO);
    pt.r.cross(pt.p) - hat(pt.p) * theta - hat(pt.r) * e
}

/// Scalar effective mass for the double monopole, determinant of the
/// effective mass matrix otherwise (NaN where undefined).
pub fn effective_mass_diagnostic(model: &FieldModel, pt: &PhasePoint) -> f64 {
    match model.kind() {
        ModelKind::DoubleMonopole { e, theta } => mstar(pt, e, theta),
        _ => model
            .sample(pt)
            .and_then(|s| effective_mass_matrix(&s, model.coupling()))
            .map(|m| m.determinant())
            .unwrap_or(f64::NAN),
    }
}
