//! Experiment drivers. Each run writes its artifacts and one manifest into
//! the configured output directory and reports an exit code.

use std::path::Path;
use std::time::Instant;

use geomech::dynamics::{
    capture_condition, critical_entry, integrate, integrate_planar, scatter_batch, EventKind, Phase, Trajectory,
};
use geomech::fields::{closure_residuals, FieldModel, PlanarModel, PlanarPoint};
use geomech::linalg::Vec2;
use geomech::poisson::mstar;
use geomech::souriau::PhasePoint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::brackets::{bracket_table_planar, bracket_table_space, BracketTable, SpaceStructure};
use crate::config::{Experiment, ExperimentConfig, Model, StructureName};
use crate::initials::{planar_initials, random_point, space_initials};
use crate::output::{num, write_planar_csv, write_trajectory_csv, EventRecord, OutputDir, RunManifest, TrajectorySummary};
use crate::shift::{shift_experiment, ShiftStatus};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Exit code and the lines meant for stderr.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub messages: Vec<String>,
}

enum Failure {
    Config(String),
    Io(String),
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

#[derive(Default)]
struct Report {
    trajectories: Vec<TrajectorySummary>,
    artifacts: Vec<String>,
    /// Numerical failures; any entry makes the exit code 3.
    failures: Vec<String>,
}

/// Runs `experiment` with `cfg`, which must already have been validated.
pub fn run(cfg: &ExperimentConfig, experiment: Experiment) -> Outcome {
    if let Err(msg) = cfg.validate_for(experiment) {
        return Outcome { code: EXIT_CONFIG, messages: vec![format!("config error: {msg}")] };
    }
    let start = Instant::now();
    let out = match OutputDir::new(Path::new(&cfg.output.dir), &cfg.output.prefix) {
        Ok(o) => o,
        Err(e) => return Outcome { code: EXIT_IO, messages: vec![format!("cannot create {}: {e}", cfg.output.dir)] },
    };
    let result = match experiment {
        Experiment::Simulate => simulate(cfg, &out),
        Experiment::Scatter => scatter(cfg, &out),
        Experiment::Capture => capture(cfg, &out),
        Experiment::Shift => shift(cfg, &out),
        Experiment::ClosureCheck => closure_check(cfg, &out),
        Experiment::Brackets => brackets(cfg, &out),
    };
    let report = match result {
        Ok(r) => r,
        Err(Failure::Config(msg)) => return Outcome { code: EXIT_CONFIG, messages: vec![format!("config error: {msg}")] },
        Err(Failure::Io(msg)) => return Outcome { code: EXIT_IO, messages: vec![format!("i/o error: {msg}")] },
    };
    let code = if report.failures.is_empty() { EXIT_OK } else { EXIT_NUMERIC };
    let manifest = RunManifest {
        experiment: experiment.as_str().to_string(),
        config: cfg.clone(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        trajectories: report.trajectories,
        artifacts: report.artifacts,
        exit_code: code,
    };
    if let Err(e) = out.write_json("manifest.json", &manifest) {
        return Outcome { code: EXIT_IO, messages: vec![format!("cannot write manifest: {e}")] };
    }
    Outcome { code, messages: report.failures }
}

fn space_model(cfg: &ExperimentConfig) -> Result<FieldModel, Failure> {
    let spec = cfg.model.as_ref().ok_or_else(|| Failure::Config("missing [model]".into()))?;
    match spec.build().map_err(|e| Failure::Config(e.to_string()))? {
        Model::Space(m) => Ok(m),
        Model::Planar(_) => Err(Failure::Config("this experiment needs a three-dimensional model".into())),
    }
}

fn initials_for(cfg: &ExperimentConfig, model: &FieldModel) -> Result<Vec<PhasePoint>, Failure> {
    let spec = cfg.initials.as_ref().ok_or_else(|| Failure::Config("no initial conditions".into()))?;
    let (e, theta) = cfg.model.as_ref().map(|m| m.couplings()).unwrap_or((model.coupling(), model.theta()));
    let pts = space_initials(spec, e, theta, cfg.seed).map_err(Failure::Config)?;
    if pts.is_empty() {
        return Err(Failure::Config("no initial conditions".into()));
    }
    Ok(pts)
}

/// One stderr line per early termination or failure, with the events.
fn failure_lines(index: usize, tr: &Trajectory) -> Option<String> {
    let stop = tr.events.iter().find(|e| matches!(e.kind, EventKind::SingularApproach))?;
    let dump = serde_json::to_string(&tr.events).unwrap_or_default();
    Some(format!("trajectory {index}: singular approach at t = {}: {}; events: {dump}", stop.time, stop.detail))
}

fn write_space_trajectories(results: Vec<geomech::Result<Trajectory>>, out: &OutputDir, report: &mut Report) -> Result<Vec<Option<Trajectory>>, Failure> {
    let mut events = Vec::new();
    let mut kept = Vec::with_capacity(results.len());
    for (i, res) in results.into_iter().enumerate() {
        match res {
            Ok(tr) => {
                let name = out.trajectory_name(i);
                write_trajectory_csv(&tr, out.create(&name)?)?;
                report.trajectories.push(TrajectorySummary::of(i, Some(name), &tr));
                if let Some(line) = failure_lines(i, &tr) {
                    report.failures.push(line);
                }
                events.extend(tr.events.iter().cloned().map(|event| EventRecord { trajectory: i, event }));
                kept.push(Some(tr));
            }
            Err(e) => {
                report.failures.push(format!("trajectory {i}: {e}"));
                report.trajectories.push(TrajectorySummary::failed(i, e.to_string()));
                kept.push(None);
            }
        }
    }
    out.write_json("events.json", &events)?;
    report.artifacts.push("events.json".into());
    Ok(kept)
}

fn simulate(cfg: &ExperimentConfig, out: &OutputDir) -> Result<Report, Failure> {
    let spec = cfg.model.as_ref().ok_or_else(|| Failure::Config("missing [model]".into()))?;
    let mut report = Report::default();
    match spec.build().map_err(|e| Failure::Config(e.to_string()))? {
        Model::Space(model) => {
            let pts = initials_for(cfg, &model)?;
            if pts.len() != 1 {
                return Err(Failure::Config(format!("simulate takes exactly one initial condition, got {}", pts.len())));
            }
            let res = vec![integrate(&model, &pts[0], cfg.t_end, &cfg.integrator)];
            write_space_trajectories(res, out, &mut report)?;
        }
        Model::Planar(model) => {
            let spec = cfg.initials.as_ref().ok_or_else(|| Failure::Config("no initial conditions".into()))?;
            let pts = planar_initials(spec).map_err(Failure::Config)?;
            if pts.len() != 1 {
                return Err(Failure::Config(format!("simulate takes exactly one initial condition, got {}", pts.len())));
            }
            simulate_planar(&model, &pts[0], cfg, out, &mut report)?;
        }
    }
    Ok(report)
}

fn simulate_planar(model: &PlanarModel, x0: &PlanarPoint, cfg: &ExperimentConfig, out: &OutputDir, report: &mut Report) -> Result<(), Failure> {
    let mut events: Vec<EventRecord> = Vec::new();
    match integrate_planar(model, x0, cfg.t_end, &cfg.integrator) {
        Ok(tr) => {
            let name = out.trajectory_name(0);
            write_planar_csv(&tr, out.create(&name)?)?;
            report.trajectories.push(TrajectorySummary::of_planar(0, Some(name), &tr));
            if let Some(stop) = tr.events.iter().find(|e| e.kind == EventKind::SingularApproach) {
                let dump = serde_json::to_string(&tr.events).unwrap_or_default();
                report.failures.push(format!("trajectory 0: singular approach at t = {}: {}; events: {dump}", stop.time, stop.detail));
            }
            events.extend(tr.events.iter().cloned().map(|event| EventRecord { trajectory: 0, event }));
        }
        Err(e) => {
            report.failures.push(format!("trajectory 0: {e}"));
            report.trajectories.push(TrajectorySummary::failed(0, e.to_string()));
        }
    }
    out.write_json("events.json", &events)?;
    report.artifacts.push("events.json".into());
    Ok(())
}

fn scatter(cfg: &ExperimentConfig, out: &OutputDir) -> Result<Report, Failure> {
    let model = space_model(cfg)?;
    let pts = initials_for(cfg, &model)?;
    let mut report = Report::default();
    let results = scatter_batch(&model, &pts, cfg.t_end, &cfg.integrator);
    write_space_trajectories(results, out, &mut report)?;
    Ok(report)
}

/// Capture diagnostics of one double-monopole trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaptureRecord {
    pub index: usize,
    pub j0: f64,
    /// `(|j₀| − (|θ|+|e|)) / (|θ|+|e|)`
    pub j_excess: f64,
    pub capture_events: usize,
    pub capture_time: Option<f64>,
    /// Smallest relative `M*` and distance from the critical momentum
    /// reached before capture (or over the whole run).
    pub min_mstar_rel: f64,
    pub min_parallel_rel: f64,
    pub entry: Option<[f64; 3]>,
    /// Closed-form entry point, when `|j₀| = |θ|+|e|`.
    pub r_cr: Option<[f64; 3]>,
    pub entry_error: Option<f64>,
    /// Largest relative deviation from `|r| = √(2E₀)(t − t_c) + |r(t_c)|`.
    pub radius_law_error: Option<f64>,
}

pub fn capture_record(index: usize, tr: &Trajectory, e: f64, theta: f64) -> CaptureRecord {
    let k = theta.abs() + e.abs();
    let first = tr.first();
    let j0 = first.j.norm();
    let (mut min_m, mut min_p) = (f64::INFINITY, f64::INFINITY);
    for s in tr.free_samples() {
        if let Ok((m, p)) = capture_condition(&s.point, e, theta) {
            min_m = min_m.min(m);
            min_p = min_p.min(p);
        }
    }
    let ev = tr.capture_event();
    let entry_cf = critical_entry(first.j, first.hamiltonian, e, theta, 1e-9).ok();
    let entry_error = match (ev, entry_cf) {
        (Some(ev), Some(cf)) => Some((ev.state.r - cf.r_cr).norm() / cf.r_cr.norm()),
        _ => None,
    };
    let radius_law_error = ev.map(|ev| {
        let v = (2.0 * first.hamiltonian).sqrt();
        let rho0 = ev.state.r.norm();
        tr.samples
            .iter()
            .filter(|s| s.phase == Phase::Captured)
            .map(|s| {
                let law = v * (s.point.t - ev.time) + rho0;
                (s.point.r.norm() - law).abs() / law
            })
            .fold(0.0, f64::max)
    });
    CaptureRecord {
        index,
        j0,
        j_excess: (j0 - k) / k,
        capture_events: tr.events_of(EventKind::Capture).count(),
        capture_time: ev.map(|e| e.time),
        min_mstar_rel: min_m,
        min_parallel_rel: min_p,
        entry: ev.map(|e| e.state.r.to_array()),
        r_cr: entry_cf.map(|c| c.r_cr.to_array()),
        entry_error,
        radius_law_error,
    }
}

fn capture(cfg: &ExperimentConfig, out: &OutputDir) -> Result<Report, Failure> {
    let model = space_model(cfg)?;
    let (e, theta) = model.monopole_couplings();
    let pts = initials_for(cfg, &model)?;
    let mut report = Report::default();
    let results = scatter_batch(&model, &pts, cfg.t_end, &cfg.integrator);
    let kept = write_space_trajectories(results, out, &mut report)?;
    let records: Vec<CaptureRecord> =
        kept.iter().enumerate().filter_map(|(i, tr)| tr.as_ref().map(|tr| capture_record(i, tr, e, theta))).collect();
    out.write_json("capture.json", &records)?;
    report.artifacts.push("capture.json".into());
    Ok(report)
}

fn shift(cfg: &ExperimentConfig, out: &OutputDir) -> Result<Report, Failure> {
    let spec = cfg.shift.clone().unwrap_or_default();
    let mut report = Report::default();
    let mut w = csv::Writer::from_writer(out.create("shift.csv")?);
    w.write_record(["theta", "p0", "e_mag", "delta", "target", "rel_err", "direction_cosine", "fit_residual", "status"])?;
    for &theta in &spec.theta {
        for &p0 in &spec.p0 {
            match shift_experiment(theta, p0, spec.e_mag) {
                Ok(s) => {
                    let rel = if s.target == 0.0 { s.delta } else { (s.delta - s.target).abs() / s.target };
                    let status = match s.status {
                        ShiftStatus::Conclusive => "conclusive",
                        ShiftStatus::Inconclusive => "inconclusive",
                    };
                    let mut rec: Vec<String> =
                        [s.theta, s.p0, s.e_mag, s.delta, s.target, rel, s.direction_cosine, s.fit_residual].map(num).to_vec();
                    rec.push(status.into());
                    w.write_record(rec)?;
                }
                Err(e) => report.failures.push(format!("shift θ = {theta}, p0 = {p0}: {e}")),
            }
        }
    }
    w.flush()?;
    report.artifacts.push("shift.csv".into());
    Ok(report)
}

fn closure_check(cfg: &ExperimentConfig, out: &OutputDir) -> Result<Report, Failure> {
    let model = space_model(cfg)?;
    let spec = cfg.closure.clone().unwrap_or_default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = Report::default();
    let mut w = csv::Writer::from_writer(out.create("closure.csv")?);
    let mut wrote_header = false;
    for i in 0..spec.count {
        let pt = random_point(&mut rng, spec.r_range, spec.p_range);
        let (coarse, fine) = match (closure_residuals(&model, &pt, spec.step), closure_residuals(&model, &pt, 0.5 * spec.step)) {
            (Ok(c), Ok(f)) => (c, f),
            (Err(e), _) | (_, Err(e)) => {
                report.failures.push(format!("closure point {i}: {e}"));
                continue;
            }
        };
        let comps = coarse.components();
        if !wrote_header {
            let mut h: Vec<String> = ["point", "r1", "r2", "r3", "p1", "p2", "p3"].map(String::from).to_vec();
            h.extend(comps.iter().map(|(n, _)| n.clone()));
            h.extend(["max_abs", "ratio_min", "ratio_max"].map(String::from));
            w.write_record(&h)?;
            wrote_header = true;
        }
        // refinement ratio over the components above the rounding floor
        let ratios: Vec<f64> =
            comps.iter().zip(fine.components()).filter(|((_, c), _)| c.abs() >= 1e-12).map(|((_, c), (_, f))| c / f).collect();
        let (rmin, rmax) = ratios.iter().fold((f64::NAN, f64::NAN), |(lo, hi), &r| (lo.min(r), hi.max(r)));
        let mut rec = vec![i.to_string()];
        rec.extend(pt.to_array6().map(num));
        rec.extend(comps.iter().map(|(_, v)| num(*v)));
        rec.extend([coarse.max_abs(), rmin, rmax].map(num));
        w.write_record(rec)?;
        if coarse.max_abs() > spec.tolerance {
            report.failures.push(format!("closure point {i}: residual {:e} exceeds {:e}", coarse.max_abs(), spec.tolerance));
        }
    }
    w.flush()?;
    report.artifacts.push("closure.csv".into());
    Ok(report)
}

fn brackets(cfg: &ExperimentConfig, out: &OutputDir) -> Result<Report, Failure> {
    let spec = cfg.brackets.clone().unwrap_or_default();
    let model = cfg.model.as_ref().ok_or_else(|| Failure::Config("missing [model]".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let table: BracketTable = match model.build().map_err(|e| Failure::Config(e.to_string()))? {
        Model::Space(m) => {
            let mut pts = match &cfg.initials {
                Some(init) => {
                    let (e, theta) = model.couplings();
                    space_initials(init, e, theta, cfg.seed).map_err(Failure::Config)?
                }
                None => vec![],
            };
            let (e, theta) = m.monopole_couplings();
            let wanted = pts.len() + spec.random_points;
            while pts.len() < wanted {
                let pt = random_point(&mut rng, [0.5, 2.0], [0.5, 2.0]);
                // keep clear of the degenerate locus of the double monopole
                if mstar(&pt, e, theta).abs() > 0.05 * (pt.r.norm() * pt.p.norm()).powi(3) {
                    pts.push(pt);
                }
            }
            let structure = match spec.structure {
                StructureName::Canonical => SpaceStructure::Canonical,
                StructureName::Model => SpaceStructure::Model(&m),
            };
            bracket_table_space(structure, &pts, spec.step)
        }
        Model::Planar(m) => {
            if spec.structure == StructureName::Canonical {
                return Err(Failure::Config("the canonical structure is three-dimensional".into()));
            }
            let mut pts = match &cfg.initials {
                Some(init) => planar_initials(init).map_err(Failure::Config)?,
                None => vec![],
            };
            for _ in 0..spec.random_points {
                let mut c = || rng.random_range(-1.0..1.0);
                pts.push(PlanarPoint::new(Vec2::new(c(), c()), Vec2::new(c(), c()), 0.0));
            }
            bracket_table_planar(&m, &pts, spec.step)
        }
    };
    table.write_csv(out.create("brackets.csv")?)?;
    let mut report = Report::default();
    report.artifacts.push("brackets.csv".into());
    Ok(report)
}
