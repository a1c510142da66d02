//! Transverse shift of a charge crossing a momentum-space monopole under a
//! uniform electric field.

use geomech::dynamics::{integrate, IntegratorOptions};
use geomech::fields::momentum_monopole_uniform_e;
use geomech::linalg::Vec3;
use geomech::souriau::PhasePoint;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftStatus {
    Conclusive,
    /// The displacement had not settled to its asymptote within the window.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftResult {
    pub theta: f64,
    pub p0: f64,
    pub e_mag: f64,
    /// Modulus of the transverse displacement between the asymptotes.
    pub delta: f64,
    /// `2|θ|/p₀`
    pub target: f64,
    pub displacement: [f64; 3],
    /// Cosine between the displacement and `E × p₀`; zero when there is
    /// no displacement.
    pub direction_cosine: f64,
    /// Largest deviation of the sampled offset from the fitted asymptotes.
    pub fit_residual: f64,
    pub status: ShiftStatus,
}

/// Least-squares `a + b/t²` through `(t, y)`.
fn fit_asymptote(ts: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = ts.len() as f64;
    let us: Vec<f64> = ts.iter().map(|t| 1.0 / (t * t)).collect();
    let (su, sy) = (us.iter().sum::<f64>(), ys.iter().sum::<f64>());
    let suu = us.iter().map(|u| u * u).sum::<f64>();
    let suy = us.iter().zip(ys).map(|(u, y)| u * y).sum::<f64>();
    let det = n * suu - su * su;
    let (a, b) = if det.abs() < 1e-300 { (sy / n, 0.0) } else { ((suu * sy - su * suy) / det, (n * suy - su * sy) / det) };
    let worst = us.iter().zip(ys).map(|(u, y)| (y - a - b * u).abs()).fold(0.0, f64::max);
    (a, b, worst)
}

/// Sends a charge with closest-approach momentum `p₀ x̂` through the dual
/// monopole with `E = e_mag ŷ` over `t ∈ [−T, T]`, `T = 400 p₀/e_mag`, and
/// measures the offset from ballistic motion between the two asymptotes.
pub fn shift_experiment(theta: f64, p0: f64, e_mag: f64) -> geomech::Result<ShiftResult> {
    if !(p0 > 0.0 && e_mag > 0.0) {
        return Err(geomech::Error::Precondition(format!("need p0 > 0 and E > 0, got p0 = {p0}, E = {e_mag}")));
    }
    let e_field = Vec3::new(0.0, e_mag, 0.0);
    let p_closest = Vec3::new(p0, 0.0, 0.0);
    let t_half = 400.0 * p0 / e_mag;
    let model = momentum_monopole_uniform_e(theta, e_field);
    // ballistic motion through the origin at t = 0
    let ballistic = |t: f64| p_closest * t + e_field * (0.5 * t * t);
    let x0 = PhasePoint::new(ballistic(-t_half), p_closest - e_field * t_half, -t_half);
    let opts = IntegratorOptions { rel_tol: 1e-12, abs_tol: 1e-12, max_step: t_half / 400.0, ..Default::default() };
    let tr = integrate(&model, &x0, t_half, &opts)?;

    let ehat = e_field * (1.0 / e_mag);
    let offset = |s: &PhasePoint| {
        let q = s.r - ballistic(s.t);
        q - ehat * q.dot(ehat)
    };
    let window = |sign: f64| -> Vec<(f64, Vec3)> {
        tr.samples
            .iter()
            .filter(|s| sign * s.point.t >= 0.25 * t_half)
            .map(|s| (s.point.t, offset(&s.point)))
            .collect()
    };
    let side = |sign: f64| -> (Vec3, f64, f64) {
        let w = window(sign);
        let ts: Vec<f64> = w.iter().map(|x| x.0).collect();
        let mut a = [0.0; 3];
        let mut tail: f64 = 0.0;
        let mut worst: f64 = 0.0;
        for (k, ak) in a.iter_mut().enumerate() {
            let ys: Vec<f64> = w.iter().map(|x| x.1.get(k)).collect();
            let (fa, fb, res) = fit_asymptote(&ts, &ys);
            *ak = fa;
            tail = tail.max((fb / (0.25 * t_half).powi(2)).abs());
            worst = worst.max(res);
        }
        (Vec3::from_array(a), tail, worst)
    };
    let (a_in, tail_in, res_in) = side(-1.0);
    let (a_out, tail_out, res_out) = side(1.0);
    let d = a_out - a_in;
    let delta = d.norm();
    let axis = e_field.cross(p_closest);
    let direction_cosine = if delta < 1e-12 { 0.0 } else { d.dot(axis) / (delta * axis.norm()) };
    let fit_residual = res_in.max(res_out);
    let settled = tail_in.max(tail_out) <= 1e-2 * delta.max(1e-9) && fit_residual <= 1e-3 * delta.max(1e-9);
    let status = if tr.terminated_early || !settled { ShiftStatus::Inconclusive } else { ShiftStatus::Conclusive };
    Ok(ShiftResult {
        theta,
        p0,
        e_mag,
        delta,
        target: 2.0 * theta.abs() / p0,
        displacement: d.to_array(),
        direction_cosine,
        fit_residual,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asymptote_fit_recovers_coefficients() {
        let ts: Vec<f64> = (1..50).map(|k| 10.0 + k as f64).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 0.3 - 2.0 / (t * t)).collect();
        let (a, b, r) = fit_asymptote(&ts, &ys);
        assert!((a - 0.3).abs() < 1e-12 && (b + 2.0).abs() < 1e-9 && r < 1e-12);
    }

    #[test]
    fn no_dual_field_no_shift() {
        let s = shift_experiment(0.0, 1.0, 1.0).unwrap();
        assert!(s.delta < 1e-8, "{}", s.delta);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(shift_experiment(0.1, 0.0, 1.0).is_err());
        assert!(shift_experiment(0.1, 1.0, -1.0).is_err());
    }
}
