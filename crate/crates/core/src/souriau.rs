//! The evolution-space 2-form `σ` and equations of motion as its kernel.
//!
//! Coordinates are ordered `(r₁, r₂, r₃, p₁, p₂, p₃, t)`. Entry `(a, b)` of
//! the matrix is the coefficient of `dξ_a ∧ dξ_b`, so `σ(u, v) = uᵀ A v`.

use nalgebra::{Matrix3, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{FieldModel, FieldSample, PlanarModel, PlanarPoint};
use crate::linalg::{invert3, levi_civita, mat3_mul_vec, nullspace, AntisymMatrix, Vec2, Vec3};

/// A point `(r, p, t)` of evolution space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhasePoint {
    pub r: Vec3,
    pub p: Vec3,
    pub t: f64,
}

impl PhasePoint {
    pub fn new(r: Vec3, p: Vec3, t: f64) -> Self {
        PhasePoint { r, p, t }
    }

    pub fn is_finite(&self) -> bool {
        self.r.is_finite() && self.p.is_finite() && self.t.is_finite()
    }

    pub fn to_array7(&self) -> [f64; 7] {
        let (r, p) = (self.r, self.p);
        [r.x, r.y, r.z, p.x, p.y, p.z, self.t]
    }

    pub fn from_array7(a: [f64; 7]) -> Self {
        PhasePoint::new(Vec3::new(a[0], a[1], a[2]), Vec3::new(a[3], a[4], a[5]), a[6])
    }

    /// Phase-space part `(r, p)`.
    pub fn to_array6(&self) -> [f64; 6] {
        let (r, p) = (self.r, self.p);
        [r.x, r.y, r.z, p.x, p.y, p.z]
    }

    pub fn from_array6(a: [f64; 6], t: f64) -> Self {
        PhasePoint::new(Vec3::new(a[0], a[1], a[2]), Vec3::new(a[3], a[4], a[5]), t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SouriauMatrix {
    pub a: AntisymMatrix<7>,
    pub e: f64,
    /// Dual monopole strength when assembled from a model that has one.
    pub theta: Option<f64>,
}

/// Tangent vector `(ṙ, ṗ)` along a motion, normalized to `ṫ = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseVelocity {
    pub rdot: Vec3,
    pub pdot: Vec3,
}

impl PhaseVelocity {
    pub fn to_array6(&self) -> [f64; 6] {
        let (r, p) = (self.rdot, self.pdot);
        [r.x, r.y, r.z, p.x, p.y, p.z]
    }
}

/// Kernel data at a point where no unique motion exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularReport {
    pub kernel_dim: usize,
    /// Orthonormal kernel basis, each vector in coordinate order.
    pub basis: Vec<Vec<f64>>,
    /// Largest `|t|`-component over the basis.
    pub time_component: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelSolution<V> {
    Regular(V),
    Singular(SingularReport),
}

impl<V> KernelSolution<V> {
    pub fn regular(self) -> Option<V> {
        match self {
            KernelSolution::Regular(v) => Some(v),
            KernelSolution::Singular(_) => None,
        }
    }

    pub fn is_singular(&self) -> bool {
        matches!(self, KernelSolution::Singular(_))
    }

    pub fn report(&self) -> Option<&SingularReport> {
        match self {
            KernelSolution::Singular(r) => Some(r),
            _ => None,
        }
    }
}

const R: usize = 0;
const P: usize = 3;
const T: usize = 6;

/// Fills `σ` from the local field data with charge coupling `e`.
pub fn assemble_sigma(sample: &FieldSample, e: f64) -> SouriauMatrix {
    let mut a = AntisymMatrix::<7>::zeros();
    let (mu, g, q) = (sample.mu.to_array(), sample.g.to_array(), sample.q.to_array());
    let eb = levi_civita(sample.b_field * e);
    let kap = levi_civita(sample.kappa);
    let qa = levi_civita(sample.q);
    for i in 0..3 {
        a.set(P + i, R + i, 1.0 - mu[i]);
        a.set(P + i, T, -(1.0 - mu[i]) * g[i]);
        a.set(R + i, T, e * sample.e_field.get(i));
        for j in (i + 1)..3 {
            a.set(R + i, R + j, eb.get(i, j));
            a.set(P + i, P + j, kap.get(i, j));
        }
    }
    if q != [0.0; 3] {
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    a.add_to(R + i, P + j, qa.get(i, j));
                }
            }
        }
    }
    SouriauMatrix { a, e, theta: None }
}

/// Samples the model and assembles `σ` at the point.
pub fn sigma_at(model: &FieldModel, point: &PhasePoint) -> Result<SouriauMatrix> {
    let sample = model.sample(point)?;
    let mut s = assemble_sigma(&sample, model.coupling());
    s.theta = model.param("theta");
    Ok(s)
}

/// Kernel direction normalized to unit time component, or a report.
fn kernel_direction<const N: usize>(a: &AntisymMatrix<N>, tol: f64) -> KernelSolution<SVector<f64, N>> {
    let basis = nullspace(a, tol);
    let time_component = basis.iter().map(|v| v[N - 1].abs()).fold(0.0, f64::max);
    if basis.len() == 1 && time_component > tol {
        let v = basis[0] / basis[0][N - 1];
        return KernelSolution::Regular(v);
    }
    KernelSolution::Singular(SingularReport {
        kernel_dim: basis.len(),
        basis: basis.iter().map(|v| v.iter().copied().collect()).collect(),
        time_component,
    })
}

/// Motion through the point as the kernel of `σ`.
pub fn kernel_velocity(sigma: &SouriauMatrix, tol: f64) -> KernelSolution<PhaseVelocity> {
    match kernel_direction(&sigma.a, tol) {
        KernelSolution::Regular(v) => KernelSolution::Regular(PhaseVelocity {
            rdot: Vec3::new(v[0], v[1], v[2]),
            pdot: Vec3::new(v[3], v[4], v[5]),
        }),
        KernelSolution::Singular(r) => KernelSolution::Singular(r),
    }
}

/// `M* = M + 2Q_A + e κ̃ M⁻¹ B̃` with `M = 1 − Q − Q_A` and `ṽ_ij = ε_ijk v_k`.
pub fn effective_mass_matrix(sample: &FieldSample, e: f64) -> Result<Matrix3<f64>> {
    let qa = levi_civita(sample.q).to_mat3();
    let m = Matrix3::identity() - Matrix3::from_diagonal(&sample.mu.to_na()) - qa;
    let minv = invert3(&m).ok_or_else(|| Error::DegenerateMass(format!("det(1 − Q − Q_A) = {}", m.determinant())))?;
    let kap = levi_civita(sample.kappa).to_mat3();
    let b = levi_civita(sample.b_field).to_mat3();
    Ok(m + 2.0 * qa + e * kap * minv * b)
}

/// `e ṙ·E − (1 − Q)ṗ·g`, identically zero along kernel motions.
pub fn verify_energy_identity(v: &PhaseVelocity, sample: &FieldSample, e: f64) -> f64 {
    e * v.rdot.dot(sample.e_field) - one_minus_q(sample, v.pdot).dot(sample.g)
}

/// Magnitude of the two terms of [`verify_energy_identity`], for relative
/// comparisons.
pub fn energy_identity_scale(v: &PhaseVelocity, sample: &FieldSample, e: f64) -> f64 {
    (e * v.rdot.norm() * sample.e_field.norm()).abs() + one_minus_q(sample, v.pdot).norm() * sample.g.norm()
}

fn one_minus_q(sample: &FieldSample, w: Vec3) -> Vec3 {
    Vec3::new(
        (1.0 - sample.mu.x) * w.x,
        (1.0 - sample.mu.y) * w.y,
        (1.0 - sample.mu.z) * w.z,
    )
}

/// Velocity of the kinematic relation solved with the effective mass
/// matrix: `M* ṙ = (1 − Q) g − e κ̃ M⁻¹ E`, then `ṗ` from the force law.
/// Valid for `Q_A = 0`.
pub fn effective_mass_velocity(sample: &FieldSample, e: f64) -> Result<PhaseVelocity> {
    if sample.q != Vec3::ZERO {
        return Err(Error::Precondition("effective-mass route requires Q_A = 0".into()));
    }
    let mstar = effective_mass_matrix(sample, e)?;
    let minv = invert3(&mstar).ok_or_else(|| Error::DegenerateMass("effective mass matrix is singular".into()))?;
    let kap = levi_civita(sample.kappa).to_mat3();
    let m = Matrix3::from_diagonal(&(Vec3::new(1.0, 1.0, 1.0) - sample.mu).to_na());
    let inv_m = invert3(&m).ok_or_else(|| Error::DegenerateMass("det(1 − Q) = 0".into()))?;
    let rhs = one_minus_q(sample, sample.g) - mat3_mul_vec(&(e * kap * inv_m), sample.e_field);
    let rdot = mat3_mul_vec(&minv, rhs);
    let force = (sample.e_field + rdot.cross(sample.b_field)) * e;
    Ok(PhaseVelocity { rdot, pdot: mat3_mul_vec(&inv_m, force) })
}

/// `(ẋ, ṗ)` of the planar model.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanarVelocity {
    pub xdot: Vec2,
    pub pdot: Vec2,
}

/// `σ` of the planar model in the order `(x₁, x₂, p₁, p₂, t)`:
/// `dp_i∧dx_i + θ dp₁∧dp₂ + eB dx₁∧dx₂ + eE_i dx_i∧dt − (p_i/m) dp_i∧dt`.
pub fn assemble_planar_sigma(model: &PlanarModel, point: &PlanarPoint) -> AntisymMatrix<5> {
    let mut a = AntisymMatrix::<5>::zeros();
    let ef = model.e_field(point.x);
    let e = model.charge();
    a.set(2, 0, 1.0);
    a.set(3, 1, 1.0);
    a.set(2, 3, model.theta());
    a.set(0, 1, e * model.b_at(point.x));
    a.set(0, 4, e * ef.x);
    a.set(1, 4, e * ef.y);
    a.set(2, 4, -point.p.x / model.mass());
    a.set(3, 4, -point.p.y / model.mass());
    a
}

pub fn planar_kernel_velocity(sigma: &AntisymMatrix<5>, tol: f64) -> KernelSolution<PlanarVelocity> {
    match kernel_direction(sigma, tol) {
        KernelSolution::Regular(v) => KernelSolution::Regular(PlanarVelocity {
            xdot: Vec2::new(v[0], v[1]),
            pdot: Vec2::new(v[2], v[3]),
        }),
        KernelSolution::Singular(r) => KernelSolution::Singular(r),
    }
}
