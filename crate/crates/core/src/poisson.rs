//! Co-symplectic (Poisson) tensors, finite-difference brackets and the
//! conserved quantities of the double monopole.
//!
//! Phase-space coordinates are ordered `(r₁, r₂, r₃, p₁, p₂, p₃)`, planar
//! ones `(x₁, x₂, p₁, p₂)`. Brackets are `{f, g} = ∂_a f P^{ab} ∂_b g`, and
//! Hamilton's equations read `ξ̇ = P ∇H`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix3, SMatrix};

use crate::error::{Error, Result};
use crate::fields::{PlanarModel, PlanarPoint};
use crate::linalg::{levi_civita, pfaffian, AntisymMatrix, Vec3};
use crate::souriau::PhasePoint;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoSymplecticMatrix<const N: usize = 6> {
    pub a: AntisymMatrix<N>,
    /// Scalar whose vanishing makes the structure degenerate.
    pub degeneracy_factor: f64,
}

impl<const N: usize> CoSymplecticMatrix<N> {
    /// `∇fᵀ P ∇g`
    pub fn contract(&self, df: &[f64; N], dg: &[f64; N]) -> f64 {
        let mut s = 0.0;
        for i in 0..N {
            for j in 0..N {
                let pij = self.a.get(i, j);
                if pij != 0.0 {
                    s += df[i] * pij * dg[j];
                }
            }
        }
        s
    }

    /// `P ∇H`
    pub fn apply(&self, grad: &[f64; N]) -> [f64; N] {
        let mut out = [0.0; N];
        for (i, o) in out.iter_mut().enumerate() {
            for (j, g) in grad.iter().enumerate() {
                *o += self.a.get(i, j) * g;
            }
        }
        out
    }

    pub fn pfaffian(&self) -> Result<f64> {
        pfaffian(&self.a)
    }

    pub fn inverse(&self) -> Option<SMatrix<f64, N, N>> {
        self.a.as_matrix().try_inverse()
    }
}

/// `{r_i, p_j} = δ_ij`, all other brackets zero.
pub fn canonical() -> CoSymplecticMatrix<6> {
    let mut a = AntisymMatrix::zeros();
    for i in 0..3 {
        a.set(i, 3 + i, 1.0);
    }
    CoSymplecticMatrix { a, degeneracy_factor: 1.0 }
}

/// A named scalar function on evolution space.
#[derive(Clone)]
pub struct Observable {
    name: String,
    f: Arc<dyn Fn(&PhasePoint) -> f64 + Send + Sync>,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Observable({})", self.name)
    }
}

impl Observable {
    pub fn new<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&PhasePoint) -> f64 + Send + Sync + 'static,
    {
        Observable { name: name.into(), f: Arc::new(f) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, pt: &PhasePoint) -> f64 {
        (self.f)(pt)
    }

    /// Phase-space coordinate `ξ_i`, `i` in `0..6`.
    pub fn coordinate(i: usize) -> Self {
        assert!(i < 6, "coordinate index out of range");
        let names = ["r1", "r2", "r3", "p1", "p2", "p3"];
        Observable::new(names[i], move |pt: &PhasePoint| pt.to_array6()[i])
    }

    /// Free Hamiltonian `|p|²/2`.
    pub fn hamiltonian() -> Self {
        Observable::new("H", |pt: &PhasePoint| 0.5 * pt.p.norm_sq())
    }

    /// Component `i` of the total angular momentum.
    pub fn angular_momentum(e: f64, theta: f64, i: usize) -> Self {
        assert!(i < 3, "component index out of range");
        Observable::new(format!("j{}", i + 1), move |pt: &PhasePoint| {
            angular_momentum(pt, e, theta).map(|j| j.get(i)).unwrap_or(f64::NAN)
        })
    }

    /// Scalar effective mass `|r|³|p|³ − eθ r·p`.
    pub fn effective_mass(e: f64, theta: f64) -> Self {
        Observable::new("Mstar", move |pt: &PhasePoint| mstar(pt, e, theta))
    }
}

/// Scalar effective mass of the double monopole.
pub fn mstar(pt: &PhasePoint, e: f64, theta: f64) -> f64 {
    let (r, p) = (pt.r.norm(), pt.p.norm());
    (r * p).powi(3) - e * theta * pt.r.dot(pt.p)
}

fn require_regular(pt: &PhasePoint) -> Result<()> {
    if !pt.is_finite() {
        return Err(Error::SingularPoint(format!("non-finite point {pt:?}")));
    }
    if pt.r == Vec3::ZERO {
        return Err(Error::SingularPoint("r = 0".into()));
    }
    if pt.p == Vec3::ZERO {
        return Err(Error::SingularPoint("p = 0".into()));
    }
    Ok(())
}

/// `M*·P` for the double monopole, regular across `M* = 0`:
/// `[[θ|r|³ p̃, U], [−Uᵀ, e|p|³ r̃]]` with `U = |r|³|p|³ 𝟙 − eθ r⊗p`.
pub fn cosymplectic_double_monopole_numerator(pt: &PhasePoint, e: f64, theta: f64) -> Result<AntisymMatrix<6>> {
    require_regular(pt)?;
    let (r3, p3) = (pt.r.norm().powi(3), pt.p.norm().powi(3));
    let rp3 = r3 * p3;
    let pt_mat = levi_civita(pt.p);
    let rt_mat = levi_civita(pt.r);
    let (r, p) = (pt.r.to_array(), pt.p.to_array());
    let mut a = AntisymMatrix::zeros();
    for i in 0..3 {
        for j in (i + 1)..3 {
            a.set(i, j, theta * r3 * pt_mat.get(i, j));
            a.set(3 + i, 3 + j, e * p3 * rt_mat.get(i, j));
        }
        for j in 0..3 {
            let delta = if i == j { rp3 } else { 0.0 };
            a.set(i, 3 + j, delta - e * theta * r[i] * p[j]);
        }
    }
    Ok(a)
}

/// Poisson tensor of the double monopole; its degeneracy factor is `M*`.
pub fn cosymplectic_double_monopole(pt: &PhasePoint, e: f64, theta: f64) -> Result<CoSymplecticMatrix> {
    let num = cosymplectic_double_monopole_numerator(pt, e, theta)?;
    let m = mstar(pt, e, theta);
    if m == 0.0 || !m.is_finite() {
        return Err(Error::DegenerateStructure(format!("M* = {m} at {pt:?}")));
    }
    Ok(CoSymplecticMatrix { a: num.scaled(1.0 / m), degeneracy_factor: m })
}

/// Symplectic matrix on phase space from the tensors `χ`, `b`, `κ`:
/// `[[−b, −(𝟙 + χ)ᵀ], [𝟙 + χ, κ]]`.
pub fn symplectic_matrix(chi: &Matrix3<f64>, b: &AntisymMatrix<3>, kappa: &AntisymMatrix<3>) -> AntisymMatrix<6> {
    let one_chi = Matrix3::identity() + chi;
    let mut w = AntisymMatrix::zeros();
    for i in 0..3 {
        for j in (i + 1)..3 {
            w.set(i, j, -b.get(i, j));
            w.set(3 + i, 3 + j, kappa.get(i, j));
        }
        for j in 0..3 {
            w.set(i, 3 + j, -one_chi[(j, i)]);
        }
    }
    w
}

/// General Poisson tensor from `χ` (any 3×3), `b` (`b_ij = −ε_ijk eB_k`)
/// and `κ` (`κ_ij = ε_ijk κ_k`).
///
/// For `χ = 0` the closed block formula
/// `D⁻¹ [[κ, D𝟙 + (bκ)ᵀ], [−D𝟙 − bκ, −b]]`, `D = 1 − ½Tr(bκ)`, is used.
/// For `χ ≠ 0` the symplectic matrix is inverted numerically and the
/// degeneracy factor is its pfaffian.
pub fn cosymplectic_general(chi: &Matrix3<f64>, b: &AntisymMatrix<3>, kappa: &AntisymMatrix<3>) -> Result<CoSymplecticMatrix> {
    let scale = 1.0 + b.max_abs() * kappa.max_abs() + chi.amax() * chi.amax();
    if chi.iter().all(|&x| x == 0.0) {
        let bk = b.to_mat3() * kappa.to_mat3();
        let d = 1.0 - 0.5 * bk.trace();
        if d.abs() <= 1e-14 * scale {
            return Err(Error::DegenerateStructure(format!("degeneracy factor {d}")));
        }
        let mut a = AntisymMatrix::zeros();
        for i in 0..3 {
            for j in (i + 1)..3 {
                a.set(i, j, kappa.get(i, j) / d);
                a.set(3 + i, 3 + j, -b.get(i, j) / d);
            }
            for j in 0..3 {
                let delta = if i == j { d } else { 0.0 };
                a.set(i, 3 + j, (delta + bk[(j, i)]) / d);
            }
        }
        return Ok(CoSymplecticMatrix { a, degeneracy_factor: d });
    }
    let w = symplectic_matrix(chi, b, kappa);
    let pf = pfaffian(&w)?;
    if pf.abs() <= 1e-14 * scale * scale * scale {
        return Err(Error::DegenerateStructure(format!("pfaffian of the symplectic matrix is {pf}")));
    }
    let inv = w
        .as_matrix()
        .try_inverse()
        .ok_or_else(|| Error::DegenerateStructure("symplectic matrix not invertible".into()))?;
    Ok(CoSymplecticMatrix { a: AntisymMatrix::from_upper_of(&inv), degeneracy_factor: pf })
}

/// Trace expression `1 − ½Tr(χ² + b(𝟙 + 2χ)κ)` for the degeneracy factor.
/// It equals the pfaffian of the symplectic matrix only at `χ = 0`.
pub fn trace_degeneracy_factor(chi: &Matrix3<f64>, b: &AntisymMatrix<3>, kappa: &AntisymMatrix<3>) -> f64 {
    let (b, k) = (b.to_mat3(), kappa.to_mat3());
    1.0 - 0.5 * (chi * chi + b * (Matrix3::identity() + 2.0 * chi) * k).trace()
}

/// Planar exotic brackets: `{x₁,x₂} = mθ/m*`, `{x_i,p_j} = (m/m*) δ_ij`,
/// `{p₁,p₂} = meB/m*`. The degeneracy factor is `m*/m`.
pub fn cosymplectic_planar(model: &PlanarModel, pt: &PlanarPoint) -> Result<CoSymplecticMatrix<4>> {
    let ms = model.effective_mass(pt.x);
    let m = model.mass();
    if ms == 0.0 || !ms.is_finite() {
        return Err(Error::DegenerateStructure(format!("m* = {ms} at {pt:?}")));
    }
    let f = m / ms;
    let mut a = AntisymMatrix::zeros();
    a.set(0, 1, model.theta() * f);
    a.set(0, 2, f);
    a.set(1, 3, f);
    a.set(2, 3, model.charge() * model.b_at(pt.x) * f);
    Ok(CoSymplecticMatrix { a, degeneracy_factor: ms / m })
}

fn steps<const N: usize>(x: &[f64; N], step: f64) -> [f64; N] {
    let mut h = [0.0; N];
    for (hi, xi) in h.iter_mut().zip(x) {
        *hi = step * xi.abs().max(1.0);
    }
    h
}

fn central<const N: usize, F: Fn(&[f64; N]) -> f64>(f: &F, x: &[f64; N], h: &[f64; N], scale: f64) -> [f64; N] {
    let mut g = [0.0; N];
    for a in 0..N {
        let hh = h[a] * scale;
        let (mut xp, mut xm) = (*x, *x);
        xp[a] += hh;
        xm[a] -= hh;
        g[a] = (f(&xp) - f(&xm)) / (2.0 * hh);
    }
    g
}

/// Central-difference gradient at steps `step·max(1,|x_a|)` and half that,
/// Richardson-extrapolated once.
pub fn gradient<const N: usize, F: Fn(&[f64; N]) -> f64>(f: F, x: &[f64; N], step: f64) -> [f64; N] {
    let h = steps(x, step);
    let coarse = central(&f, x, &h, 1.0);
    let fine = central(&f, x, &h, 0.5);
    let mut g = [0.0; N];
    for a in 0..N {
        g[a] = (4.0 * fine[a] - coarse[a]) / 3.0;
    }
    g
}

/// `{f, g}` at the point with finite-difference gradients.
pub fn bracket(f: &Observable, g: &Observable, pt: &PhasePoint, structure: &CoSymplecticMatrix, step: f64) -> Result<f64> {
    if !(step > 0.0) {
        return Err(Error::Precondition(format!("step must be positive, got {step}")));
    }
    let x = pt.to_array6();
    let t = pt.t;
    let df = gradient(|y: &[f64; 6]| f.eval(&PhasePoint::from_array6(*y, t)), &x, step);
    let dg = gradient(|y: &[f64; 6]| g.eval(&PhasePoint::from_array6(*y, t)), &x, step);
    let v = structure.contract(&df, &dg);
    if !v.is_finite() {
        return Err(Error::SingularPoint(format!("bracket {{{}, {}}} not finite at {pt:?}", f.name(), g.name())));
    }
    Ok(v)
}

/// `{f, g}` for functions of the coordinate array (any dimension).
pub fn bracket_array<const N: usize, F, G>(f: F, g: G, x: &[f64; N], structure: &CoSymplecticMatrix<N>, step: f64) -> f64
where
    F: Fn(&[f64; N]) -> f64,
    G: Fn(&[f64; N]) -> f64,
{
    structure.contract(&gradient(f, x, step), &gradient(g, x, step))
}

/// Largest cyclic sum `{ξ_a,{ξ_b,ξ_c}} + cyclic` over coordinate triples,
/// `Σ_d (P_ad ∂_d P_bc + P_bd ∂_d P_ca + P_cd ∂_d P_ab)`, with the
/// derivatives of the structure taken by Richardson-extrapolated central
/// differences.
pub fn jacobi_residual<const N: usize, F>(builder: F, x: &[f64; N], step: f64) -> Result<f64>
where
    F: Fn(&[f64; N]) -> Result<CoSymplecticMatrix<N>>,
{
    if !(step > 0.0) {
        return Err(Error::Precondition(format!("step must be positive, got {step}")));
    }
    let p0 = builder(x)?;
    let h = steps(x, step);
    // dp[d] = ∂_d P
    let mut dp = Vec::with_capacity(N);
    for d in 0..N {
        let diff = |s: f64| -> Result<SMatrix<f64, N, N>> {
            let (mut xp, mut xm) = (*x, *x);
            xp[d] += h[d] * s;
            xm[d] -= h[d] * s;
            let (a, b) = (builder(&xp)?, builder(&xm)?);
            Ok((a.a.as_matrix() - b.a.as_matrix()) / (2.0 * h[d] * s))
        };
        let coarse = diff(1.0)?;
        let fine = diff(0.5)?;
        dp.push((4.0 * fine - coarse) / 3.0);
    }
    let p = p0.a.as_matrix();
    let mut worst: f64 = 0.0;
    for a in 0..N {
        for b in (a + 1)..N {
            for c in (b + 1)..N {
                let mut s = 0.0;
                for (d, dd) in dp.iter().enumerate() {
                    s += p[(a, d)] * dd[(b, c)] + p[(b, d)] * dd[(c, a)] + p[(c, d)] * dd[(a, b)];
                }
                worst = worst.max(s.abs());
            }
        }
    }
    if !worst.is_finite() {
        return Err(Error::SingularPoint("Jacobi residual not finite".into()));
    }
    Ok(worst)
}

/// `j = r×p − θ p̂ − e r̂`
pub fn angular_momentum(pt: &PhasePoint, e: f64, theta: f64) -> Result<Vec3> {
    require_regular(pt)?;
    let rhat = pt.r * (1.0 / pt.r.norm());
    let phat = pt.p * (1.0 / pt.p.norm());
    Ok(pt.r.cross(pt.p) - phat * theta - rhat * e)
}

/// `|j|²` minus its closed form in terms of the angle `α` between `r` and
/// `p`: `|r×p|² + (|θ|+|e|)² − 4|eθ| s²(α/2)`, `s = sin` for `eθ > 0` and
/// `cos` for `eθ < 0`.
pub fn j_norm_identity_residual(pt: &PhasePoint, e: f64, theta: f64) -> Result<f64> {
    let j = angular_momentum(pt, e, theta)?;
    let cos_a = (pt.r.dot(pt.p) / (pt.r.norm() * pt.p.norm())).clamp(-1.0, 1.0);
    let half = 0.5 * cos_a.acos();
    let s = if e * theta < 0.0 { half.cos() } else { half.sin() };
    let k = theta.abs() + e.abs();
    let closed = pt.r.cross(pt.p).norm_sq() + k * k - 4.0 * (e * theta).abs() * s * s;
    Ok(j.norm_sq() - closed)
}

/// Closed form `3|p|²(|r|⁴|p|⁴ − e²θ²) p·r` for the bracket of the effective
/// mass with the Hamiltonian restricted to the critical manifold.
pub fn critical_bracket_closed_form(pt: &PhasePoint, e: f64, theta: f64) -> f64 {
    let (r2, p2) = (pt.r.norm_sq(), pt.p.norm_sq());
    3.0 * p2 * (r2 * r2 * p2 * p2 - e * e * theta * theta) * pt.p.dot(pt.r)
}

/// Finite-difference `M*{M*, H}` (the bracket with the regular numerator
/// `M*·P`) minus [`critical_bracket_closed_form`], at a point of `M* = 0`.
///
/// The bracket itself carries a `1/M*` and is undefined on the manifold;
/// the closed form is its regular part there.
pub fn critical_bracket_residual(pt: &PhasePoint, e: f64, theta: f64, step: f64) -> Result<f64> {
    if e * theta == 0.0 {
        return Err(Error::Precondition("no critical manifold when eθ = 0".into()));
    }
    require_regular(pt)?;
    let rel = mstar(pt, e, theta).abs() / (pt.r.norm() * pt.p.norm()).powi(3);
    if rel > 1e-8 {
        return Err(Error::Precondition(format!("point is off the critical manifold, |M*|/|r|³|p|³ = {rel:e}")));
    }
    let num = CoSymplecticMatrix { a: cosymplectic_double_monopole_numerator(pt, e, theta)?, degeneracy_factor: 1.0 };
    let m = Observable::effective_mass(e, theta);
    let h = Observable::hamiltonian();
    let fd = bracket(&m, &h, pt, &num, step)?;
    Ok(fd - critical_bracket_closed_form(pt, e, theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::axial_to_matrix;

    fn pt(r: [f64; 3], p: [f64; 3]) -> PhasePoint {
        PhasePoint::new(Vec3::from_array(r), Vec3::from_array(p), 0.0)
    }

    #[test]
    fn reference_point_entries() {
        let s = cosymplectic_double_monopole(&pt([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]), 1.0, 1.0).unwrap();
        assert_eq!(s.degeneracy_factor, 1.0);
        assert_eq!(s.a.get(0, 3), 1.0);
        assert_eq!(s.a.get(3, 4), 0.0);
    }

    #[test]
    fn switch_off_is_canonical() {
        let s = cosymplectic_double_monopole(&pt([0.3, 1.0, -0.2], [1.0, 0.4, 2.0]), 0.0, 0.0).unwrap();
        assert!((s.a - canonical().a).max_abs() < 1e-15);
    }

    #[test]
    fn double_monopole_inverts_the_symplectic_matrix() {
        let q = pt([0.7, -1.1, 0.4], [0.9, 0.3, -1.4]);
        let (e, th) = (1.3, -0.6);
        let s = cosymplectic_double_monopole(&q, e, th).unwrap();
        let b = axial_to_matrix(q.r * (e / q.r.norm().powi(3)));
        let k = levi_civita(q.p * (th / q.p.norm().powi(3)));
        let w = symplectic_matrix(&Matrix3::zeros(), &b, &k);
        let prod = s.a.as_matrix() * w.as_matrix();
        assert!((prod - SMatrix::<f64, 6, 6>::identity()).amax() < 1e-12);
        let g = cosymplectic_general(&Matrix3::zeros(), &b, &k).unwrap();
        assert!((g.a - s.a).max_abs() < 1e-12);
    }

    #[test]
    fn general_with_chi_inverts() {
        let chi = Matrix3::new(0.1, -0.2, 0.05, 0.3, 0.0, 0.1, -0.1, 0.2, -0.15);
        let b = axial_to_matrix(Vec3::new(0.2, -0.3, 0.5));
        let k = levi_civita(Vec3::new(0.1, 0.4, -0.2));
        let s = cosymplectic_general(&chi, &b, &k).unwrap();
        let w = symplectic_matrix(&chi, &b, &k);
        assert!((s.a.as_matrix() * w.as_matrix() - SMatrix::<f64, 6, 6>::identity()).amax() < 1e-12);
        let zero = cosymplectic_general(&Matrix3::zeros(), &b, &k).unwrap();
        let pf = pfaffian(&symplectic_matrix(&Matrix3::zeros(), &b, &k)).unwrap();
        assert!((pf - zero.degeneracy_factor).abs() < 1e-14);
        assert!((trace_degeneracy_factor(&Matrix3::zeros(), &b, &k) - pf).abs() < 1e-14);
    }

    #[test]
    fn angular_momentum_examples() {
        let j = angular_momentum(&pt([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]), 1.0, 1.0).unwrap();
        assert_eq!(j, Vec3::new(-1.0, -1.0, 1.0));
        let j = angular_momentum(&pt([1.0, 2.0, 0.0], [2.0, 4.0, 0.0]), 1.0, 1.0).unwrap();
        assert!((j.norm() - 2.0).abs() < 1e-15);
        assert!(angular_momentum(&pt([0.0; 3], [1.0, 0.0, 0.0]), 1.0, 1.0).is_err());
    }

    #[test]
    fn j_norm_identity() {
        let q = pt([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        assert!(j_norm_identity_residual(&q, 1.0, 1.0).unwrap().abs() < 1e-14);
        let q = pt([0.4, -1.0, 2.0], [1.5, 0.5, 0.2]);
        for (e, th) in [(1.0, 2.0), (-1.0, 2.0), (0.5, -0.3)] {
            assert!(j_norm_identity_residual(&q, e, th).unwrap().abs() < 1e-13);
        }
    }

    #[test]
    fn canonical_brackets() {
        let q = pt([0.3, 0.2, 0.1], [1.0, 2.0, 3.0]);
        let v = bracket(&Observable::coordinate(0), &Observable::coordinate(3), &q, &canonical(), 1e-5).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
        assert!(jacobi_residual(|_: &[f64; 6]| Ok(canonical()), &q.to_array6(), 1e-4).unwrap() < 1e-9);
    }

    #[test]
    fn critical_bracket_needs_manifold() {
        let q = pt([1.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
        assert!(critical_bracket_residual(&q, 1.0, 1.0, 1e-5).unwrap().abs() < 1e-6);
        assert!(matches!(critical_bracket_residual(&q, 0.0, 0.0, 1e-5), Err(Error::Precondition(_))));
        let off = pt([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        assert!(matches!(critical_bracket_residual(&off, 1.0, 1.0, 1e-5), Err(Error::Precondition(_))));
    }
}
