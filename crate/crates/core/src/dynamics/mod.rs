//! Adaptive integration with invariant monitoring, capture onto the
//! critical manifold and the reduced motion afterwards.
//!
//! The state `(r, p, t)` is advanced in an independent variable `τ`. Far
//! from `M* = 0` this is physical time. Close to it (double monopole only)
//! the integrator switches to `s` with `dt = |M*| ds`, where the equations
//! `M*ṙ = …`, `M*ṗ = …` are regular; every sample records `τ` so the
//! `s ↔ t` map is available afterwards.

mod capture;
mod planar;
mod rk;
mod velocity;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use capture::{
    capture_condition, critical_entry, critical_momentum, initial_for_angular_momentum, reduced_evolve, CriticalEntry,
};
pub use planar::{hall_reduced_planar, integrate_planar, PlanarSample, PlanarTrajectory};
pub use rk::Dense;
pub use velocity::{effective_mass_diagnostic, hamiltonian, total_angular_momentum, VelocityRoute};

use crate::error::{Error, Result};
use crate::fields::{FieldModel, ModelKind};
use crate::linalg::Vec3;
use crate::souriau::PhasePoint;
use velocity::{dm_numerator, resolve, Route};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest step in physical time.
    pub max_step: f64,
    pub initial_step: f64,
    /// Threshold on `|M*|/(|r|³|p|³)`.
    pub capture_tol: f64,
    /// Threshold on `‖p − sgn(eθ)√|eθ| r/|r|²‖/|p|`.
    pub parallel_tol: f64,
    pub reparameterize_near_singularity: bool,
    pub route: VelocityRoute,
    /// Integrate the negated velocity field.
    pub reverse_time: bool,
    pub max_steps: usize,
    /// Relative drift of a conserved quantity that raises an alarm event.
    pub drift_alarm: f64,
    /// Stop with a domain-exit event once `|r|` exceeds this.
    pub max_radius: Option<f64>,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 1.0,
            initial_step: 1e-3,
            capture_tol: 1e-8,
            parallel_tol: 1e-6,
            reparameterize_near_singularity: true,
            route: VelocityRoute::Auto,
            reverse_time: false,
            max_steps: 2_000_000,
            drift_alarm: 1e-6,
            max_radius: None,
        }
    }
}

impl IntegratorOptions {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("max_step", self.max_step),
            ("initial_step", self.initial_step),
            ("capture_tol", self.capture_tol),
            ("parallel_tol", self.parallel_tol),
            ("drift_alarm", self.drift_alarm),
        ];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidOptions(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidOptions("max_steps must be positive".into()));
        }
        if let Some(r) = self.max_radius {
            if !(r > 0.0) {
                return Err(Error::InvalidOptions(format!("max_radius must be positive, got {r}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Free,
    Captured,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Free => "free",
            Phase::Captured => "captured",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    Capture,
    SingularApproach,
    DomainExit,
    InvariantDriftAlarm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub time: f64,
    pub state: PhasePoint,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub point: PhasePoint,
    /// Value of the independent variable (time, or `s` where rescaled).
    pub tau: f64,
    pub hamiltonian: f64,
    pub j: Vec3,
    pub mstar: f64,
    /// Step that produced this sample (in `τ` units).
    pub step: f64,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
    pub phase: Phase,
    /// Stopped before `t_end` at a singular approach or excluded locus.
    pub terminated_early: bool,
}

impl Trajectory {
    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectories are never empty")
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    pub fn capture_event(&self) -> Option<&Event> {
        self.events_of(EventKind::Capture).next()
    }

    /// Largest relative energy drift over the free phase.
    pub fn max_energy_drift(&self) -> f64 {
        let h0 = self.first().hamiltonian;
        let scale = if h0 == 0.0 { 1.0 } else { h0.abs() };
        self.free_samples().map(|s| (s.hamiltonian - h0).abs() / scale).fold(0.0, f64::max)
    }

    /// Largest `max_i |j_i − j_i(0)| / |j(0)|` over the free phase.
    pub fn max_angular_momentum_drift(&self) -> f64 {
        let j0 = self.first().j;
        let scale = if j0.norm() == 0.0 { 1.0 } else { j0.norm() };
        self.free_samples().map(|s| (s.j - j0).max_abs() / scale).fold(0.0, f64::max)
    }

    pub fn free_samples(&self) -> impl Iterator<Item = &Sample> {
        self.samples.iter().filter(|s| s.phase == Phase::Free)
    }

    /// State at physical time `t` by linear interpolation between samples.
    pub fn state_at(&self, t: f64) -> Option<PhasePoint> {
        let s = &self.samples;
        let k = s.partition_point(|x| x.point.t < t);
        if k == 0 {
            return (s[0].point.t == t).then_some(s[0].point);
        }
        if k == s.len() {
            return None;
        }
        let (a, b) = (&s[k - 1].point, &s[k].point);
        let w = (t - a.t) / (b.t - a.t);
        let lerp = |x: Vec3, y: Vec3| x + (y - x) * w;
        Some(PhasePoint::new(lerp(a.r, b.r), lerp(a.p, b.p), t))
    }
}

#[derive(Clone, Copy, PartialEq, Debug)]
enum Mode {
    Time,
    /// Rescaled time with `dt/ds = sign·M*`.
    Rescaled { sign: f64 },
}

struct Rhs<'a> {
    model: &'a FieldModel,
    route: Route,
    dir: f64,
    dm: Option<(f64, f64)>,
}

impl Rhs<'_> {
    fn eval(&self, mode: Mode, y: &[f64; 7]) -> Result<[f64; 7]> {
        let pt = PhasePoint::from_array7(*y);
        let mut out = [0.0; 7];
        match mode {
            Mode::Time => {
                let v = velocity::velocity(self.model, &pt, self.route)?;
                for i in 0..6 {
                    out[i] = self.dir * v[i];
                }
                out[6] = 1.0;
            }
            Mode::Rescaled { sign } => {
                let (e, theta) = self.dm.expect("rescaling only for the double monopole");
                let (n, m) = dm_numerator(&pt, e, theta, self.route)?;
                for i in 0..6 {
                    out[i] = self.dir * sign * n[i];
                }
                out[6] = sign * m;
            }
        }
        if out.iter().all(|x| x.is_finite()) {
            Ok(out)
        } else {
            Err(Error::SingularPoint(format!("non-finite velocity at {pt:?}")))
        }
    }
}

struct Monitor<'a> {
    model: &'a FieldModel,
    h0: f64,
    j0: Vec3,
    energy_alarm: bool,
    j_alarm: bool,
}

impl Monitor<'_> {
    fn sample(&self, y: &[f64; 7], tau: f64, step: f64) -> Sample {
        let point = PhasePoint::from_array7(*y);
        Sample {
            point,
            tau,
            hamiltonian: hamiltonian(self.model, &point),
            j: total_angular_momentum(self.model, &point),
            mstar: effective_mass_diagnostic(self.model, &point),
            step,
            phase: Phase::Free,
        }
    }

    fn check(&mut self, s: &Sample, threshold: f64, events: &mut Vec<Event>) {
        if self.model.conserves_energy() && !self.energy_alarm {
            let scale = if self.h0 == 0.0 { 1.0 } else { self.h0.abs() };
            let drift = (s.hamiltonian - self.h0).abs() / scale;
            if drift > threshold {
                self.energy_alarm = true;
                events.push(Event {
                    kind: EventKind::InvariantDriftAlarm,
                    time: s.point.t,
                    state: s.point,
                    detail: format!("relative energy drift {drift:e}"),
                });
            }
        }
        if self.model.conserves_angular_momentum() && !self.j_alarm {
            let scale = if self.j0.norm() == 0.0 { 1.0 } else { self.j0.norm() };
            let drift = (s.j - self.j0).max_abs() / scale;
            if drift > threshold {
                self.j_alarm = true;
                events.push(Event {
                    kind: EventKind::InvariantDriftAlarm,
                    time: s.point.t,
                    state: s.point,
                    detail: format!("relative angular momentum drift {drift:e}"),
                });
            }
        }
    }
}

fn error_norm(y: &[f64; 7], y_new: &[f64; 7], err: &[f64; 7], opts: &IntegratorOptions) -> f64 {
    let mut s = 0.0;
    for i in 0..6 {
        let sc = opts.abs_tol + opts.rel_tol * y[i].abs().max(y_new[i].abs());
        s += (err[i] / sc).powi(2);
    }
    (s / 6.0).sqrt()
}

/// Bisects `[lo, hi]` on the dense output for the first point where `pred`
/// holds, given that it fails at `lo` and holds at `hi`. Stops once the
/// bracket is shorter than `t_tol` in physical time.
fn bisect<P: Fn(&[f64; 7]) -> bool>(dense: &Dense<7>, mut lo: f64, mut hi: f64, t_tol: f64, pred: P) -> [f64; 7] {
    let mut y_hi = dense.eval(hi);
    for _ in 0..200 {
        let y_lo = dense.eval(lo);
        if (y_hi[6] - y_lo[6]).abs() <= t_tol && (hi - lo) <= 1e-9 * dense.h.abs() {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let y_mid = dense.eval(mid);
        if pred(&y_mid) {
            hi = mid;
            y_hi = y_mid;
        } else {
            lo = mid;
        }
    }
    y_hi
}

/// Integrates `model` from `initial` to physical time `t_end`.
pub fn integrate(model: &FieldModel, initial: &PhasePoint, t_end: f64, opts: &IntegratorOptions) -> Result<Trajectory> {
    opts.validate()?;
    let t0 = initial.t;
    if !(t_end > t0) || !t_end.is_finite() {
        return Err(Error::Precondition(format!("t_end = {t_end} must exceed the initial time {t0}")));
    }
    let route = resolve(model, opts.route)?;
    model.sample(initial)?;
    let dm = match model.kind() {
        ModelKind::DoubleMonopole { e, theta } => Some((e, theta)),
        _ => None,
    };
    let capture_possible = dm.is_some_and(|(e, th)| e * th != 0.0);
    if capture_possible {
        let (e, th) = dm.unwrap();
        let (m_rel, _) = capture_condition(initial, e, th)?;
        if m_rel <= opts.capture_tol {
            return Err(Error::Precondition(format!(
                "initial state is on the critical manifold (|M*|/|r|³|p|³ = {m_rel:e})"
            )));
        }
    }
    let can_rescale = opts.reparameterize_near_singularity && capture_possible && route != Route::Kernel;
    let rhs = Rhs { model, route, dir: if opts.reverse_time { -1.0 } else { 1.0 }, dm };
    let rel_of = |y: &[f64; 7]| -> Option<(f64, f64)> {
        let (e, th) = dm?;
        capture_condition(&PhasePoint::from_array7(*y), e, th).ok()
    };
    let mstar_of = |y: &[f64; 7]| -> f64 { effective_mass_diagnostic(model, &PhasePoint::from_array7(*y)) };
    let t_tol = 1e-10 * (t_end - t0);

    let mut y = initial.to_array7();
    let mut tau = t0;
    let mut mode = Mode::Time;
    let mut k1 = rhs.eval(mode, &y)?;
    let mut h = opts.initial_step.min(opts.max_step);
    let mut events = Vec::new();
    let mut monitor = Monitor {
        model,
        h0: hamiltonian(model, initial),
        j0: total_angular_momentum(model, initial),
        energy_alarm: false,
        j_alarm: false,
    };
    let mut samples = vec![monitor.sample(&y, tau, 0.0)];
    let mut terminated_early = false;
    let mut steps = 0usize;

    let terminate = |kind: EventKind, y: &[f64; 7], detail: String| Event {
        kind,
        time: y[6],
        state: PhasePoint::from_array7(*y),
        detail,
    };

    let snap = 1e-13 * t_end.abs().max(1.0);
    'outer: while y[6] < t_end {
        steps += 1;
        if steps > opts.max_steps {
            events.push(terminate(EventKind::SingularApproach, &y, format!("step budget of {} exhausted", opts.max_steps)));
            terminated_early = true;
            break;
        }
        let m_now = mstar_of(&y);
        match mode {
            Mode::Time => h = h.min(opts.max_step).min(t_end - y[6]),
            Mode::Rescaled { .. } => {
                if m_now.abs() > 0.0 {
                    h = h.min(opts.max_step / m_now.abs());
                }
            }
        }
        let h_min = 1e-14 * tau.abs().max(1.0);
        if h < h_min {
            let near = model.exclusion_distance(&PhasePoint::from_array7(y));
            let kind = if near < 1e-6 { EventKind::DomainExit } else { EventKind::SingularApproach };
            events.push(terminate(kind, &y, format!("step size underflow (h = {h:e}, mode {mode:?})")));
            terminated_early = true;
            break;
        }

        let mut f = |_: f64, x: &[f64; 7]| rhs.eval(mode, x);
        let trial = match rk::step(&mut f, tau, &y, &k1, h) {
            Ok(s) => s,
            Err(_) => {
                h *= 0.25;
                continue;
            }
        };
        let err = error_norm(&y, &trial.y, &trial.err, opts);
        if !(err <= 1.0) {
            let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.2, 1.0) } else { 0.2 };
            h *= fac;
            continue;
        }
        let m_new = mstar_of(&trial.y);
        match mode {
            Mode::Time => {
                if capture_possible && m_new.signum() != m_now.signum() {
                    h *= 0.25;
                        continue;
                }
            }
            Mode::Rescaled { sign } => {
                let crossed = sign * m_new < 0.0;
                let captured_end = rel_of(&trial.y)
                    .is_some_and(|(m, p)| m <= opts.capture_tol && p <= opts.parallel_tol);
                if crossed && !captured_end {
                    let state = bisect(&trial.dense, tau, tau + h, t_tol, |x| sign * mstar_of(x) <= 0.0);
                    let (m_rel, p_rel) = rel_of(&state).unwrap_or((f64::NAN, f64::NAN));
                    events.push(terminate(
                        EventKind::SingularApproach,
                        &state,
                        format!("M* changes sign off the critical manifold (parallel residual {p_rel:e}, M* residual {m_rel:e})"),
                    ));
                    terminated_early = true;
                    break 'outer;
                }
            }
        }

        // the step ends past t_end in rescaled time: cut it at t_end
        let mut y_new = trial.y;
        let mut tau_new = tau + h;
        if (t_end - y_new[6]).abs() <= snap {
            y_new[6] = t_end;
        } else if y_new[6] > t_end {
            let mut lo = tau;
            let mut hi = tau_new;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if trial.dense.eval(mid)[6] > t_end {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= 1e-15 * hi.abs().max(1.0) {
                    break;
                }
            }
            y_new = trial.dense.eval(hi);
            y_new[6] = t_end;
            tau_new = hi;
        }

        if capture_possible {
            if let Some((m, p)) = rel_of(&y_new) {
                if m <= opts.capture_tol && p <= opts.parallel_tol {
                    let pred = |x: &[f64; 7]| {
                        rel_of(x).is_some_and(|(m, p)| m <= opts.capture_tol && p <= opts.parallel_tol)
                    };
                    let state = bisect(&trial.dense, tau, tau_new, t_tol, pred);
                    let sp = PhasePoint::from_array7(state);
                    let (m_rel, p_rel) = rel_of(&state).unwrap();
                    events.push(Event {
                        kind: EventKind::Capture,
                        time: sp.t,
                        state: sp,
                        detail: format!("|M*| residual {m_rel:e}, parallel residual {p_rel:e}"),
                    });
                    let (e, th) = dm.unwrap();
                    let e0 = monitor.h0;
                    let entry = CriticalEntry { r_cr: sp.r, v_cr: sp.r * ((2.0 * e0).sqrt() / sp.r.norm()) };
                    let reduced = reduced_evolve(&entry, sp.t, t_end, e, th, opts.max_step);
                    let last_t = samples.last().map(|s: &Sample| s.point.t).unwrap_or(f64::NEG_INFINITY);
                    let offset = tau;
                    samples.extend(reduced.samples.into_iter().filter(|s| s.point.t > last_t).map(|mut s| {
                        s.tau = offset + (s.point.t - sp.t);
                        s
                    }));
                    return Ok(Trajectory { samples, events, phase: Phase::Captured, terminated_early: false });
                }
            }
        }

        let fsal = rhs.eval(mode, &y_new);
        y = y_new;
        tau = tau_new;
        let s = monitor.sample(&y, tau, h);
        monitor.check(&s, opts.drift_alarm, &mut events);
        if s.point.t > samples.last().unwrap().point.t {
            samples.push(s);
        }
        if let Some(rmax) = opts.max_radius {
            if s.point.r.norm() > rmax {
                events.push(terminate(EventKind::DomainExit, &y, format!("|r| exceeded {rmax}")));
                break;
            }
        }

        // mode switching with hysteresis
        let mut switched = false;
        if can_rescale {
            let m_rel = rel_of(&y).map(|(m, _)| m).unwrap_or(f64::INFINITY);
            let m_here = mstar_of(&y);
            match mode {
                Mode::Time if m_rel < 100.0 * opts.capture_tol => {
                    mode = Mode::Rescaled { sign: m_here.signum() };
                    h /= m_here.abs().max(f64::MIN_POSITIVE);
                    switched = true;
                }
                Mode::Rescaled { .. } if m_rel > 1000.0 * opts.capture_tol => {
                    mode = Mode::Time;
                    h *= m_here.abs();
                    switched = true;
                }
                _ => {}
            }
        }
        k1 = if switched {
            rhs.eval(mode, &y)?
        } else {
            match fsal {
                Ok(k) => k,
                Err(e) => {
                    events.push(terminate(EventKind::SingularApproach, &y, format!("velocity undefined: {e}")));
                    terminated_early = true;
                    break;
                }
            }
        };
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
    }
    Ok(Trajectory { samples, events, phase: Phase::Free, terminated_early })
}

/// Independent integrations of an ensemble, in parallel, order preserved.
pub fn scatter_batch(
    model: &FieldModel,
    ensemble: &[PhasePoint],
    t_end: f64,
    opts: &IntegratorOptions,
) -> Vec<Result<Trajectory>> {
    ensemble.par_iter().map(|x| integrate(model, x, t_end, opts)).collect()
}
