//! The critical manifold `M* = 0` of the double monopole: capture test,
//! closed-form entry point and the radial motion after capture.

use serde::{Deserialize, Serialize};

use super::{Phase, Sample, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::poisson::{angular_momentum, mstar};
use crate::souriau::PhasePoint;

/// Relative `M*` and relative distance from `p = sgn(eθ)√|eθ| r/|r|²`.
pub fn capture_condition(state: &PhasePoint, e: f64, theta: f64) -> Result<(f64, f64)> {
    let (r, p) = (state.r.norm(), state.p.norm());
    if r == 0.0 || p == 0.0 || !state.is_finite() {
        return Err(Error::SingularPoint(format!("capture test at {state:?}")));
    }
    let mstar_rel = mstar(state, e, theta).abs() / (r * p).powi(3);
    let target = critical_momentum(state.r, e, theta);
    let parallel_rel = (state.p - target).norm() / p;
    Ok((mstar_rel, parallel_rel))
}

/// `sgn(eθ)√|eθ| r/|r|²`
pub fn critical_momentum(r: Vec3, e: f64, theta: f64) -> Vec3 {
    let et = e * theta;
    r * (et.signum() * et.abs().sqrt() / r.norm_sq())
}

/// Entry point and velocity on the critical manifold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalEntry {
    pub r_cr: Vec3,
    pub v_cr: Vec3,
}

/// Closed-form entry `r_cr = −sgn(e) √|eθ| j₀ / ((|θ|+|e|)√(2E₀))` and
/// `v_cr = √(2E₀) r̂_cr`. `|j₀|` must equal `|θ|+|e|` to relative `tol`.
pub fn critical_entry(j0: Vec3, e0: f64, e: f64, theta: f64, tol: f64) -> Result<CriticalEntry> {
    if e * theta == 0.0 {
        return Err(Error::Precondition("critical entry needs eθ ≠ 0".into()));
    }
    if !(e0 > 0.0) {
        return Err(Error::Precondition(format!("energy must be positive, got {e0}")));
    }
    let k = theta.abs() + e.abs();
    let mismatch = (j0.norm() - k).abs() / k;
    if mismatch > tol {
        return Err(Error::NoCapture(format!(
            "|j0| = {} differs from |θ|+|e| = {k} by {mismatch:e} (relative)",
            j0.norm()
        )));
    }
    let v = (2.0 * e0).sqrt();
    let r_cr = j0 * (-e.signum() * (e * theta).abs().sqrt() / (k * v));
    let v_cr = r_cr * (v / r_cr.norm());
    Ok(CriticalEntry { r_cr, v_cr })
}

/// Motion after capture: fixed direction `r̂_cr`, radius growing as
/// `|v_cr|(t − t_start) + |r_cr|`, momentum on the critical manifold.
/// Sampled at spacing at most `max_step`, endpoints included.
pub fn reduced_evolve(entry: &CriticalEntry, t_start: f64, t_end: f64, e: f64, theta: f64, max_step: f64) -> Trajectory {
    let rho0 = entry.r_cr.norm();
    let dir = entry.r_cr * (1.0 / rho0);
    let speed = entry.v_cr.norm();
    let span = (t_end - t_start).max(0.0);
    let n = if span == 0.0 { 0 } else { ((span / max_step).ceil() as usize).clamp(1, 1_000_000) };
    let mut samples = Vec::with_capacity(n + 1);
    let k = theta.abs() + e.abs();
    let j = dir * (-e.signum() * k);
    for i in 0..=n {
        let t = if i == n { t_end.max(t_start) } else { t_start + span * (i as f64) / (n as f64) };
        let rho = speed * (t - t_start) + rho0;
        let r = dir * rho;
        let p = critical_momentum(r, e, theta);
        let point = PhasePoint::new(r, p, t);
        samples.push(Sample {
            point,
            tau: t,
            hamiltonian: 0.5 * p.norm_sq(),
            j,
            mstar: mstar(&point, e, theta),
            step: if n == 0 { 0.0 } else { span / n as f64 },
            phase: Phase::Captured,
        });
    }
    Trajectory { samples, events: Vec::new(), phase: Phase::Captured, terminated_early: false }
}

/// Initial state with `|j| = j_mag`, angle `alpha` between `r` and `p` and
/// speed `p_mag`: `r = ρ x̂`, `p = p_mag (cos α x̂ + sin α ŷ)`.
pub fn initial_for_angular_momentum(j_mag: f64, alpha: f64, p_mag: f64, e: f64, theta: f64) -> Result<PhasePoint> {
    let s = alpha.sin();
    if s.abs() < 1e-12 || !(p_mag > 0.0) {
        return Err(Error::Precondition("need sin α ≠ 0 and |p| > 0".into()));
    }
    let rho2 = (j_mag * j_mag - theta * theta - e * e - 2.0 * e * theta * alpha.cos()) / (p_mag * p_mag * s * s);
    if !(rho2 > 0.0) {
        return Err(Error::Precondition(format!(
            "|j| = {j_mag} is not reachable at angle {alpha} (ρ² = {rho2})"
        )));
    }
    let pt = PhasePoint::new(
        Vec3::new(rho2.sqrt(), 0.0, 0.0),
        Vec3::new(p_mag * alpha.cos(), p_mag * s, 0.0),
        0.0,
    );
    debug_assert!((angular_momentum(&pt, e, theta).map(|j| j.norm()).unwrap_or(0.0) - j_mag).abs() < 1e-8 * j_mag.max(1.0));
    Ok(pt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_momentum_satisfies_both_residuals() {
        for lambda in [0.1, 1.0, 7.5] {
            let r = Vec3::new(0.3, -0.4, 1.2) * lambda;
            let pt = PhasePoint::new(r, critical_momentum(r, 1.0, 2.0), 0.0);
            let (m, p) = capture_condition(&pt, 1.0, 2.0).unwrap();
            assert!(m < 1e-14 && p < 1e-15, "{m} {p}");
        }
        let pt = PhasePoint::new(Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), 0.0);
        assert_eq!(capture_condition(&pt, 1.0, 1.0).unwrap().0, 1.0);
    }

    #[test]
    fn entry_examples() {
        let c = critical_entry(Vec3::new(0.0, 0.0, 5.0), 2.0, 1.0, 4.0, 1e-6).unwrap();
        assert!((c.r_cr.norm() - 1.0).abs() < 1e-15);
        let c = critical_entry(Vec3::new(0.0, 0.0, 2.0), 0.5, 1.0, 1.0, 1e-6).unwrap();
        assert_eq!(c.r_cr, Vec3::new(0.0, 0.0, -1.0));
        assert!((c.v_cr.norm() - 1.0).abs() < 1e-15);
        assert!(matches!(
            critical_entry(Vec3::new(0.0, 0.0, 2.5), 0.5, 1.0, 1.0, 1e-6),
            Err(Error::NoCapture(_))
        ));
    }

    #[test]
    fn reduced_motion_is_radial() {
        let entry = CriticalEntry { r_cr: Vec3::new(0.0, 0.0, -1.0), v_cr: Vec3::new(0.0, 0.0, -1.0) };
        let tr = reduced_evolve(&entry, 0.0, 10.0, 1.0, 1.0, 0.5);
        for s in &tr.samples {
            assert!((s.point.r.norm() - (s.point.t + 1.0)).abs() <= 1e-14 * s.point.r.norm());
            assert!(s.mstar.abs() < 1e-12);
            assert_eq!(s.j, Vec3::new(0.0, 0.0, 2.0));
        }
        assert_eq!(tr.samples.last().unwrap().point.t, 10.0);
    }

    #[test]
    fn angular_momentum_inversion() {
        let pt = initial_for_angular_momentum(2.0, 0.8, 1.3, 1.0, 1.0).unwrap();
        let j = angular_momentum(&pt, 1.0, 1.0).unwrap();
        assert!((j.norm() - 2.0).abs() < 1e-14);
        assert!(initial_for_angular_momentum(0.5, 0.8, 1.0, 1.0, 1.0).is_err());
    }
}
