//! Trajectory CSV, events JSON and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use geomech::dynamics::{Event, EventKind, Phase, PlanarTrajectory, Trajectory};
use geomech::souriau::PhasePoint;
use serde::Serialize;

use crate::config::ExperimentConfig;

pub const TRAJECTORY_HEADER: [&str; 13] = ["t", "r1", "r2", "r3", "p1", "p2", "p3", "H", "j1", "j2", "j3", "Mstar", "phase"];

/// Full-precision scientific notation, 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_trajectory_csv<W: Write>(tr: &Trajectory, w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRAJECTORY_HEADER)?;
    for s in &tr.samples {
        let (r, p) = (s.point.r, s.point.p);
        let mut rec: Vec<String> =
            [s.point.t, r.x, r.y, r.z, p.x, p.y, p.z, s.hamiltonian, s.j.x, s.j.y, s.j.z, s.mstar].map(num).to_vec();
        rec.push(s.phase.as_str().to_string());
        out.write_record(rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Planar trajectories in the same schema, embedded in `r₃ = p₃ = 0`;
/// the angular momentum columns are `NaN`.
pub fn write_planar_csv<W: Write>(tr: &PlanarTrajectory, w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRAJECTORY_HEADER)?;
    for s in &tr.samples {
        let (x, p) = (s.point.x, s.point.p);
        let nan = f64::NAN;
        let mut rec: Vec<String> =
            [s.point.t, x.x, x.y, 0.0, p.x, p.y, 0.0, s.hamiltonian, nan, nan, nan, s.mstar].map(num).to_vec();
        rec.push(Phase::Free.as_str().to_string());
        out.write_record(rec)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventRecord {
    pub trajectory: usize,
    #[serde(flatten)]
    pub event: Event,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySummary {
    pub index: usize,
    pub file: Option<String>,
    pub final_state: Option<PhasePoint>,
    pub phase: Option<Phase>,
    pub events: Vec<EventKind>,
    pub max_energy_drift: Option<f64>,
    pub max_angular_momentum_drift: Option<f64>,
    pub terminated_early: bool,
    /// Set when the integration failed outright.
    pub error: Option<String>,
}

impl TrajectorySummary {
    pub fn of(index: usize, file: Option<String>, tr: &Trajectory) -> Self {
        TrajectorySummary {
            index,
            file,
            final_state: Some(tr.last().point),
            phase: Some(tr.phase),
            events: tr.events.iter().map(|e| e.kind).collect(),
            max_energy_drift: Some(tr.max_energy_drift()),
            max_angular_momentum_drift: Some(tr.max_angular_momentum_drift()),
            terminated_early: tr.terminated_early,
            error: None,
        }
    }

    pub fn of_planar(index: usize, file: Option<String>, tr: &PlanarTrajectory) -> Self {
        let last = tr.samples.last().expect("trajectories are never empty");
        let h0 = tr.samples[0].hamiltonian;
        let scale = if h0 == 0.0 { 1.0 } else { h0.abs() };
        let drift = tr.samples.iter().map(|s| (s.hamiltonian - h0).abs() / scale).fold(0.0, f64::max);
        let (x, p) = (last.point.x, last.point.p);
        TrajectorySummary {
            index,
            file,
            final_state: Some(PhasePoint::new(
                geomech::linalg::Vec3::new(x.x, x.y, 0.0),
                geomech::linalg::Vec3::new(p.x, p.y, 0.0),
                last.point.t,
            )),
            phase: Some(Phase::Free),
            events: tr.events.iter().map(|e| e.kind).collect(),
            max_energy_drift: Some(drift),
            max_angular_momentum_drift: None,
            terminated_early: tr.terminated_early,
            error: None,
        }
    }

    pub fn failed(index: usize, error: String) -> Self {
        TrajectorySummary {
            index,
            file: None,
            final_state: None,
            phase: None,
            events: vec![],
            max_energy_drift: None,
            max_angular_momentum_drift: None,
            terminated_early: true,
            error: Some(error),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub code_version: String,
    pub wall_time_seconds: f64,
    pub trajectories: Vec<TrajectorySummary>,
    /// Files written besides the trajectories, relative to the output
    /// directory.
    pub artifacts: Vec<String>,
    pub exit_code: i32,
}

/// Writes into one output directory, creating it on first use.
pub struct OutputDir {
    root: PathBuf,
    prefix: String,
}

impl OutputDir {
    pub fn new(root: &Path, prefix: &str) -> std::io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(OutputDir { root: root.to_path_buf(), prefix: prefix.to_string() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn trajectory_name(&self, index: usize) -> String {
        format!("{}_{index:03}.csv", self.prefix)
    }

    pub fn create(&self, name: &str) -> std::io::Result<std::io::BufWriter<fs::File>> {
        Ok(std::io::BufWriter::new(fs::File::create(self.root.join(name))?))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> std::io::Result<()> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        w.write_all(b"\n")?;
        w.flush()
    }
}
