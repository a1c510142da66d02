use serde::{Deserialize, Serialize};

use super::rk;
use super::{Event, EventKind, IntegratorOptions};
use crate::error::{Error, Result};
use crate::fields::{PlanarModel, PlanarPoint};
use crate::linalg::{Vec2, Vec3};
use crate::souriau::PhasePoint;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarSample {
    pub point: PlanarPoint,
    pub hamiltonian: f64,
    pub mstar: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarTrajectory {
    pub samples: Vec<PlanarSample>,
    /// Event states are embedded in the plane `r₃ = p₃ = 0`.
    pub events: Vec<Event>,
    pub terminated_early: bool,
}

/// Drift momentum `eθ ε_ij E_j` (`ε₁₂ = +1`) the planar model is confined
/// to at the critical field.
pub fn hall_reduced_planar(e_field: Vec2, e: f64, theta: f64) -> Result<Vec2> {
    if e * theta == 0.0 {
        return Err(Error::Precondition("Hall reduction needs eθ ≠ 0".into()));
    }
    Ok(e_field.epsilon() * (e * theta))
}

/// `m*ẋ_i = p_i − emθ ε_ij E_j`, `ṗ_i = eE_i + eB ε_ij ẋ_j`.
fn velocity(model: &PlanarModel, y: &[f64; 5]) -> Result<[f64; 4]> {
    let x = Vec2::new(y[0], y[1]);
    let p = Vec2::new(y[2], y[3]);
    let ms = model.effective_mass(x);
    if ms == 0.0 || !ms.is_finite() {
        return Err(Error::DegenerateMass(format!("m* = {ms} at x = {x:?}")));
    }
    let (m, e, th) = (model.mass(), model.charge(), model.theta());
    let ef = model.e_field(x);
    let xdot = (p - ef.epsilon() * (e * m * th)) * (1.0 / ms);
    let pdot = ef * e + xdot.epsilon() * (e * model.b_at(x));
    Ok([xdot.x, xdot.y, pdot.x, pdot.y])
}

fn embed(y: &[f64; 5]) -> PhasePoint {
    PhasePoint::new(Vec3::new(y[0], y[1], 0.0), Vec3::new(y[2], y[3], 0.0), y[4])
}

/// Integrates the planar exotic equations of motion to `t_end`. Steps that
/// would carry `m*` through zero are rejected; if the step size underflows
/// the run stops with a singular-approach event.
pub fn integrate_planar(model: &PlanarModel, initial: &PlanarPoint, t_end: f64, opts: &IntegratorOptions) -> Result<PlanarTrajectory> {
    opts.validate()?;
    if !initial.is_finite() || !(t_end > initial.t) {
        return Err(Error::Precondition(format!("need a finite initial state and t_end > {}", initial.t)));
    }
    if model.effective_mass(initial.x) == 0.0 {
        return Err(Error::DegenerateMass(
            "initial state has m* = 0; the motion is given by the Hall reduction".into(),
        ));
    }
    let dir = if opts.reverse_time { -1.0 } else { 1.0 };
    let mut f = |_: f64, y: &[f64; 5]| -> Result<[f64; 5]> {
        let v = velocity(model, y)?;
        Ok([dir * v[0], dir * v[1], dir * v[2], dir * v[3], 1.0])
    };
    let sample = |y: &[f64; 5], step: f64| {
        let point = PlanarPoint::from_array4([y[0], y[1], y[2], y[3]], y[4]);
        PlanarSample { point, hamiltonian: model.hamiltonian(&point), mstar: model.effective_mass(point.x), step }
    };
    let mut y = [initial.x.x, initial.x.y, initial.p.x, initial.p.y, initial.t];
    let mut k1 = f(y[4], &y)?;
    let mut h = opts.initial_step.min(opts.max_step);
    let mut samples = vec![sample(&y, 0.0)];
    let h0 = samples[0].hamiltonian;
    let mut events = Vec::new();
    let mut alarmed = false;
    let mut terminated_early = false;
    let snap = 1e-13 * t_end.abs().max(1.0);
    let mut steps = 0;
    while y[4] < t_end {
        steps += 1;
        h = h.min(opts.max_step).min(t_end - y[4]);
        if steps > opts.max_steps || h < 1e-14 * y[4].abs().max(1.0) {
            events.push(Event {
                kind: EventKind::SingularApproach,
                time: y[4],
                state: embed(&y),
                detail: format!("step size underflow near m* = {}", model.effective_mass(Vec2::new(y[0], y[1]))),
            });
            terminated_early = true;
            break;
        }
        let trial = match rk::step(&mut f, y[4], &y, &k1, h) {
            Ok(s) => s,
            Err(_) => {
                h *= 0.25;
                continue;
            }
        };
        let mut err = 0.0;
        for i in 0..4 {
            let sc = opts.abs_tol + opts.rel_tol * y[i].abs().max(trial.y[i].abs());
            err += (trial.err[i] / sc).powi(2);
        }
        let err = (err / 4.0).sqrt();
        let m_old = model.effective_mass(Vec2::new(y[0], y[1]));
        let m_new = model.effective_mass(Vec2::new(trial.y[0], trial.y[1]));
        if !(err <= 1.0) || m_old.signum() != m_new.signum() {
            h *= if err.is_finite() && err > 1.0 { (0.9 * err.powf(-0.2)).clamp(0.2, 1.0) } else { 0.25 };
            continue;
        }
        y = trial.y;
        if (t_end - y[4]).abs() <= snap {
            y[4] = t_end;
        }
        k1 = trial.k7;
        let s = sample(&y, h);
        let scale = if h0 == 0.0 { 1.0 } else { h0.abs() };
        if !alarmed && (s.hamiltonian - h0).abs() / scale > opts.drift_alarm {
            alarmed = true;
            events.push(Event {
                kind: EventKind::InvariantDriftAlarm,
                time: y[4],
                state: embed(&y),
                detail: format!("relative energy drift {:e}", (s.hamiltonian - h0).abs() / scale),
            });
        }
        samples.push(s);
        h *= if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
    }
    Ok(PlanarTrajectory { samples, events, terminated_early })
}
