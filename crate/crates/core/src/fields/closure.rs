//! Finite-difference check of the closure (Maxwell-type) equations that a
//! field model must satisfy for the 2-form to be closed.

use serde::{Deserialize, Serialize};

use super::{FieldModel, FieldSample};
use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::souriau::PhasePoint;

/// Left side minus right side of every closure equation at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosureResidual {
    pub point: PhasePoint,
    /// `∂_{r_j} B_j`
    pub div_b: f64,
    /// `ε_kij ∂_{r_i} E_j + ∂_t B_k`
    pub faraday: Vec3,
    /// `∂_{p_j} κ_j`
    pub div_kappa: f64,
    /// `ε_kij ∂_{p_i} f_j − ∂_t κ_k` with mass flow `f_j = (1 − μ_j) g_j`
    pub dual_faraday: Vec3,
    /// `∂_t μ_i − ∂_{r_i} f_i`
    pub mass_continuity: Vec3,
    /// `½ ε_kij ∂_{r_i} f_j − ∂_t q_k`
    pub q_rate: Vec3,
    /// `∂_{r_i} μ_j − ε_ijk ∂_{r_j} q_k` (no sum over `j`)
    pub mixed_space: [[f64; 3]; 3],
    /// `∂_{r_i} κ_j − ε_ijk ∂_{p_k} μ_i − ∂_{p_i} q_j + δ_ij ∂_{p_k} q_k`
    pub mixed_momentum: [[f64; 3]; 3],
    /// `∂_{r_j} f_i + ∂_{r_i} f_j` for `(i, j)` = (1,2), (1,3), (2,3)
    pub symmetric_flow: [f64; 3],
    /// Finite-difference step used.
    pub step: f64,
}

impl ClosureResidual {
    /// Every residual component with a stable name, in a fixed order.
    pub fn components(&self) -> Vec<(String, f64)> {
        let mut out = Vec::with_capacity(41);
        out.push(("div_b".to_string(), self.div_b));
        push_vec(&mut out, "faraday", self.faraday);
        out.push(("div_kappa".to_string(), self.div_kappa));
        push_vec(&mut out, "dual_faraday", self.dual_faraday);
        push_vec(&mut out, "mass_continuity", self.mass_continuity);
        push_vec(&mut out, "q_rate", self.q_rate);
        for (name, m) in [("mixed_space", &self.mixed_space), ("mixed_momentum", &self.mixed_momentum)] {
            for (i, row) in m.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    out.push((format!("{name}_{}{}", i + 1, j + 1), *v));
                }
            }
        }
        for (k, (i, j)) in [(1, 2), (1, 3), (2, 3)].iter().enumerate() {
            out.push((format!("symmetric_flow_{i}{j}"), self.symmetric_flow[k]));
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.components().iter().map(|(_, v)| v.abs()).fold(0.0, f64::max)
    }

    fn combine(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let v3 = |a: Vec3, b: Vec3| Vec3::new(f(a.x, b.x), f(a.y, b.y), f(a.z, b.z));
        let m3 = |a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]| {
            let mut m = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] = f(a[i][j], b[i][j]);
                }
            }
            m
        };
        ClosureResidual {
            point: self.point,
            div_b: f(self.div_b, other.div_b),
            faraday: v3(self.faraday, other.faraday),
            div_kappa: f(self.div_kappa, other.div_kappa),
            dual_faraday: v3(self.dual_faraday, other.dual_faraday),
            mass_continuity: v3(self.mass_continuity, other.mass_continuity),
            q_rate: v3(self.q_rate, other.q_rate),
            mixed_space: m3(&self.mixed_space, &other.mixed_space),
            mixed_momentum: m3(&self.mixed_momentum, &other.mixed_momentum),
            symmetric_flow: [
                f(self.symmetric_flow[0], other.symmetric_flow[0]),
                f(self.symmetric_flow[1], other.symmetric_flow[1]),
                f(self.symmetric_flow[2], other.symmetric_flow[2]),
            ],
            step: self.step,
        }
    }
}

fn push_vec(out: &mut Vec<(String, f64)>, name: &str, v: Vec3) {
    for (i, c) in v.to_array().iter().enumerate() {
        out.push((format!("{name}_{}", i + 1), *c));
    }
}

/// Field data plus the mass flow, flattened for differencing.
#[derive(Clone, Copy)]
struct Flat {
    e: [f64; 3],
    b: [f64; 3],
    kappa: [f64; 3],
    mu: [f64; 3],
    q: [f64; 3],
    flow: [f64; 3],
}

impl Flat {
    fn of(s: &FieldSample) -> Self {
        let mu = s.mu.to_array();
        let g = s.g.to_array();
        Flat {
            e: s.e_field.to_array(),
            b: s.b_field.to_array(),
            kappa: s.kappa.to_array(),
            mu,
            q: s.q.to_array(),
            flow: [(1.0 - mu[0]) * g[0], (1.0 - mu[1]) * g[1], (1.0 - mu[2]) * g[2]],
        }
    }

    fn central(plus: &Flat, minus: &Flat, h: f64) -> Flat {
        let d = |a: [f64; 3], b: [f64; 3]| [(a[0] - b[0]) / (2.0 * h), (a[1] - b[1]) / (2.0 * h), (a[2] - b[2]) / (2.0 * h)];
        Flat {
            e: d(plus.e, minus.e),
            b: d(plus.b, minus.b),
            kappa: d(plus.kappa, minus.kappa),
            mu: d(plus.mu, minus.mu),
            q: d(plus.q, minus.q),
            flow: d(plus.flow, minus.flow),
        }
    }
}

fn eps(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Shifts coordinate `axis` of evolution space (0..3 position, 3..6
/// momentum, 6 time).
fn shifted(point: &PhasePoint, axis: usize, delta: f64) -> PhasePoint {
    let mut x = point.to_array7();
    x[axis] += delta;
    PhasePoint::from_array7(x)
}

/// Residuals of every closure equation by plain central differences with
/// step `step` (second order, so exact models show `O(step²)` residuals).
pub fn closure_residuals(model: &FieldModel, point: &PhasePoint, step: f64) -> Result<ClosureResidual> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Precondition(format!("finite-difference step must be positive, got {step}")));
    }
    let clearance = model.exclusion_distance(point);
    if clearance <= 2.0 * step {
        return Err(Error::SingularPoint(format!(
            "difference stencil of size {step} touches an excluded locus (distance {clearance})"
        )));
    }
    // d[axis]: derivative of every field along evolution-space axis
    let mut d = Vec::with_capacity(7);
    for axis in 0..7 {
        let plus = Flat::of(&model.sample(&shifted(point, axis, step))?);
        let minus = Flat::of(&model.sample(&shifted(point, axis, -step))?);
        d.push(Flat::central(&plus, &minus, step));
    }
    let dr = |i: usize| &d[i];
    let dp = |i: usize| &d[3 + i];
    let dt = &d[6];

    let div_b = (0..3).map(|j| dr(j).b[j]).sum();
    let div_kappa = (0..3).map(|j| dp(j).kappa[j]).sum();

    let curl = |field: &dyn Fn(usize) -> [f64; 3]| -> [f64; 3] {
        let mut c = [0.0; 3];
        for (k, ck) in c.iter_mut().enumerate() {
            for i in 0..3 {
                let di = field(i);
                for j in 0..3 {
                    *ck += eps(k, i, j) * di[j];
                }
            }
        }
        c
    };
    let curl_r_e = curl(&|i| dr(i).e);
    let curl_p_flow = curl(&|i| dp(i).flow);
    let curl_r_flow = curl(&|i| dr(i).flow);

    let faraday = Vec3::new(curl_r_e[0] + dt.b[0], curl_r_e[1] + dt.b[1], curl_r_e[2] + dt.b[2]);
    let dual_faraday = Vec3::new(
        curl_p_flow[0] - dt.kappa[0],
        curl_p_flow[1] - dt.kappa[1],
        curl_p_flow[2] - dt.kappa[2],
    );
    let mass_continuity = Vec3::new(
        dt.mu[0] - dr(0).flow[0],
        dt.mu[1] - dr(1).flow[1],
        dt.mu[2] - dr(2).flow[2],
    );
    let q_rate = Vec3::new(
        0.5 * curl_r_flow[0] - dt.q[0],
        0.5 * curl_r_flow[1] - dt.q[1],
        0.5 * curl_r_flow[2] - dt.q[2],
    );

    let mut mixed_space = [[0.0; 3]; 3];
    let mut mixed_momentum = [[0.0; 3]; 3];
    let trace_dp_q: f64 = (0..3).map(|k| dp(k).q[k]).sum();
    for i in 0..3 {
        for j in 0..3 {
            let mut s = dr(i).mu[j];
            for k in 0..3 {
                s -= eps(i, j, k) * dr(j).q[k];
            }
            mixed_space[i][j] = s;

            let mut m = dr(i).kappa[j] - dp(i).q[j];
            for k in 0..3 {
                m -= eps(i, j, k) * dp(k).mu[i];
            }
            if i == j {
                m += trace_dp_q;
            }
            mixed_momentum[i][j] = m;
        }
    }
    let sym = |i: usize, j: usize| dr(j).flow[i] + dr(i).flow[j];
    let symmetric_flow = [sym(0, 1), sym(0, 2), sym(1, 2)];

    Ok(ClosureResidual {
        point: *point,
        div_b,
        faraday,
        div_kappa,
        dual_faraday,
        mass_continuity,
        q_rate,
        mixed_space,
        mixed_momentum,
        symmetric_flow,
        step,
    })
}

/// Central differences at `step` and `step/2`, Richardson-extrapolated once
/// (fourth order).
pub fn closure_residuals_extrapolated(model: &FieldModel, point: &PhasePoint, step: f64) -> Result<ClosureResidual> {
    let coarse = closure_residuals(model, point, step)?;
    let fine = closure_residuals(model, point, 0.5 * step)?;
    let mut r = fine.combine(&coarse, |f, c| (4.0 * f - c) / 3.0);
    r.step = step;
    Ok(r)
}
