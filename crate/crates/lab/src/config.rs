//! Experiment configuration: a TOML file validated in full before any
//! computation starts. Unknown keys are rejected everywhere.

use std::fmt;
use std::path::Path;

use geomech::dynamics::IntegratorOptions;
use geomech::fields::{self, FieldModel, PlanarModel, ScalarField2};
use geomech::linalg::{Vec2, Vec3};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    Scatter,
    Shift,
    Capture,
    ClosureCheck,
    Brackets,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Scatter => "scatter",
            Experiment::Shift => "shift",
            Experiment::Capture => "capture",
            Experiment::ClosureCheck => "closure-check",
            Experiment::Brackets => "brackets",
        }
    }
}

/// Scalar field on the plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarSpec {
    Constant { value: f64 },
    Linear { value: f64, gradient: [f64; 2] },
    Gaussian { base: f64, amplitude: f64, center: [f64; 2], width: f64 },
}

impl ScalarSpec {
    fn build(&self) -> ScalarField2 {
        match self {
            ScalarSpec::Constant { value } => ScalarField2::constant(*value),
            ScalarSpec::Linear { value, gradient } => ScalarField2::linear(*value, Vec2::new(gradient[0], gradient[1])),
            ScalarSpec::Gaussian { base, amplitude, center, width } => {
                ScalarField2::gaussian(*base, *amplitude, Vec2::new(center[0], center[1]), *width)
            }
        }
    }

    fn numbers(&self) -> Vec<f64> {
        match self {
            ScalarSpec::Constant { value } => vec![*value],
            ScalarSpec::Linear { value, gradient } => vec![*value, gradient[0], gradient[1]],
            ScalarSpec::Gaussian { base, amplitude, center, width } => vec![*base, *amplitude, center[0], center[1], *width],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    DoubleMonopole {
        e: f64,
        theta: f64,
    },
    MomentumMonopoleUniformE {
        theta: f64,
        e_field: [f64; 3],
    },
    Uniform {
        e: f64,
        e_field: [f64; 3],
        b_field: [f64; 3],
    },
    Free,
    ExoticPlanar {
        m: f64,
        e: f64,
        theta: f64,
        b: ScalarSpec,
        v: ScalarSpec,
    },
}

/// A built model: three-dimensional or planar.
pub enum Model {
    Space(FieldModel),
    Planar(PlanarModel),
}

impl ModelSpec {
    pub fn is_planar(&self) -> bool {
        matches!(self, ModelSpec::ExoticPlanar { .. })
    }

    /// `(e, θ)` where the model has them.
    pub fn couplings(&self) -> (f64, f64) {
        match self {
            ModelSpec::DoubleMonopole { e, theta } => (*e, *theta),
            ModelSpec::MomentumMonopoleUniformE { theta, .. } => (1.0, *theta),
            ModelSpec::Uniform { e, .. } => (*e, 0.0),
            ModelSpec::Free => (0.0, 0.0),
            ModelSpec::ExoticPlanar { e, theta, .. } => (*e, *theta),
        }
    }

    pub fn build(&self) -> Result<Model, geomech::Error> {
        let v3 = |a: &[f64; 3]| Vec3::from_array(*a);
        Ok(match self {
            ModelSpec::DoubleMonopole { e, theta } => Model::Space(fields::double_monopole(*e, *theta)?),
            ModelSpec::MomentumMonopoleUniformE { theta, e_field } => {
                Model::Space(fields::momentum_monopole_uniform_e(*theta, v3(e_field)))
            }
            ModelSpec::Uniform { e, e_field, b_field } => Model::Space(fields::uniform(*e, v3(e_field), v3(b_field))),
            ModelSpec::Free => Model::Space(fields::free()),
            ModelSpec::ExoticPlanar { m, e, theta, b, v } => {
                Model::Planar(fields::exotic_planar(*m, *e, *theta, b.build(), v.build())?)
            }
        })
    }

    fn numbers(&self) -> Vec<f64> {
        match self {
            ModelSpec::DoubleMonopole { e, theta } => vec![*e, *theta],
            ModelSpec::MomentumMonopoleUniformE { theta, e_field } => [&[*theta][..], e_field].concat(),
            ModelSpec::Uniform { e, e_field, b_field } => [&[*e][..], e_field, b_field].concat(),
            ModelSpec::Free => vec![],
            ModelSpec::ExoticPlanar { m, e, theta, b, v } => [vec![*m, *e, *theta], b.numbers(), v.numbers()].concat(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    /// Position: three components, or two for planar models.
    pub r: Vec<f64>,
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialsSpec {
    Explicit {
        points: Vec<PointSpec>,
    },
    /// One initial per entry of `j`, built at angle `alpha` between `r`
    /// and `p` with speed `p`.
    AngularMomentum {
        j: Vec<f64>,
        alpha: f64,
        p: f64,
    },
    /// `r = (b, 0, z0)`, `p = (0, 0, p0)` for each impact parameter `b`.
    ImpactGrid {
        b: Vec<f64>,
        z0: f64,
        p0: f64,
    },
    /// Randomly oriented double-monopole initials with
    /// `|j| ∈ [j_min, j_max]`.
    RandomRegular {
        count: usize,
        j_min: f64,
        j_max: f64,
    },
}

impl InitialsSpec {
    fn numbers(&self) -> Vec<f64> {
        match self {
            InitialsSpec::Explicit { points } => points.iter().flat_map(|p| p.r.iter().chain(&p.p).copied()).collect(),
            InitialsSpec::AngularMomentum { j, alpha, p } => [j.clone(), vec![*alpha, *p]].concat(),
            InitialsSpec::ImpactGrid { b, z0, p0 } => [b.clone(), vec![*z0, *p0]].concat(),
            InitialsSpec::RandomRegular { j_min, j_max, .. } => vec![*j_min, *j_max],
        }
    }

    fn is_empty(&self) -> bool {
        match self {
            InitialsSpec::Explicit { points } => points.is_empty(),
            InitialsSpec::AngularMomentum { j, .. } => j.is_empty(),
            InitialsSpec::ImpactGrid { b, .. } => b.is_empty(),
            InitialsSpec::RandomRegular { count, .. } => *count == 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: String,
    /// File stem of the trajectory CSV files, `<prefix>_<index>.csv`.
    pub prefix: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: "out".into(), prefix: "trajectory".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShiftSpec {
    pub theta: Vec<f64>,
    pub p0: Vec<f64>,
    pub e_mag: f64,
}

impl Default for ShiftSpec {
    fn default() -> Self {
        ShiftSpec { theta: vec![0.05, 0.1, 0.2], p0: vec![0.5, 1.0, 2.0], e_mag: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClosureSpec {
    pub count: usize,
    pub step: f64,
    pub tolerance: f64,
    pub r_range: [f64; 2],
    pub p_range: [f64; 2],
}

impl Default for ClosureSpec {
    fn default() -> Self {
        ClosureSpec { count: 50, step: 1e-3, tolerance: 1e-6, r_range: [2.0, 4.0], p_range: [2.0, 4.0] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureName {
    Canonical,
    Model,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BracketsSpec {
    /// `canonical`, or the Poisson structure of the configured model.
    pub structure: StructureName,
    /// Random points added to the configured initials.
    pub random_points: usize,
    pub step: f64,
}

impl Default for BracketsSpec {
    fn default() -> Self {
        BracketsSpec { structure: StructureName::Model, random_points: 0, step: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initials: Option<InitialsSpec>,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub integrator: IntegratorOptions,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<ShiftSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closure: Option<ClosureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub brackets: Option<BracketsSpec>,
}

fn default_t_end() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub message: String,
    /// 1-based line, when it can be located.
    pub line: Option<usize>,
    pub column: Option<usize>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "line {l}, column {c}: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            _ => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map(|i| i + 1).unwrap_or(0) + 1;
    (line, col)
}

/// First line with a `nan` or `inf` literal on the value side.
fn locate_non_finite(src: &str) -> Option<usize> {
    src.lines()
        .position(|l| {
            let code = l.split('#').next().unwrap_or("");
            code.split_once('=').is_some_and(|(_, v)| {
                v.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
                    .any(|tok| tok == "nan" || tok == "inf")
            })
        })
        .map(|i| i + 1)
}

/// First line assigning `key` or opening table `key`.
fn locate(src: &str, key: &str) -> Option<usize> {
    src.lines().position(|l| {
        let t = l.trim_start();
        let assigns = t.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='));
        let opens = t.starts_with(&format!("[{key}]")) || t.starts_with(&format!("[[{key}]]"));
        assigns || opens
    })
    .map(|i| i + 1)
}

impl ExperimentConfig {
    pub fn from_toml(src: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(src).map_err(|e| {
            // tagged tables are buffered before their fields are checked, so
            // the span of an unknown field covers the whole table
            let unknown = e.message().split('`').nth(1).filter(|_| e.message().contains("unknown field"));
            let at_key = unknown.and_then(|k| {
                let l = locate(src, k)?;
                let c = src.lines().nth(l - 1)?.find(k)? + 1;
                Some((Some(l), Some(c)))
            });
            let (line, column) = match (at_key, e.span()) {
                (Some(lc), _) => lc,
                (None, Some(s)) => {
                    let (l, c) = line_col(src, s.start);
                    (Some(l), Some(c))
                }
                (None, None) => (None, None),
            };
            ConfigError { message: e.message().trim().to_string(), line, column }
        })?;
        cfg.validate().map_err(|(key, message)| {
            let line = if message.contains("finite") { locate_non_finite(src).or_else(|| locate(src, key)) } else { locate(src, key) };
            ConfigError { message, line, column: None }
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let src = std::fs::read_to_string(path).map_err(|e| ConfigError {
            message: format!("cannot read {}: {e}", path.display()),
            line: None,
            column: None,
        })?;
        Self::from_toml(&src)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    /// Checks everything that can be checked without running; the error
    /// names the offending key.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        let finite = |key: &'static str, xs: &[f64]| -> Result<(), (&'static str, String)> {
            match xs.iter().find(|x| !x.is_finite()) {
                Some(x) => Err((key, format!("{key}: parameters must be finite, got {x}"))),
                None => Ok(()),
            }
        };
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(("t_end", format!("t_end must be positive and finite, got {}", self.t_end)));
        }
        self.integrator.validate().map_err(|e| ("integrator", e.to_string()))?;
        if let Some(m) = &self.model {
            finite("model", &m.numbers())?;
            if let ModelSpec::ExoticPlanar { m, .. } = m {
                if *m <= 0.0 {
                    return Err(("m", format!("planar mass must be positive, got {m}")));
                }
            }
        }
        if let Some(init) = &self.initials {
            finite("initials", &init.numbers())?;
            let dim = if self.model.as_ref().is_some_and(ModelSpec::is_planar) { 2 } else { 3 };
            if let InitialsSpec::Explicit { points } = init {
                for pt in points {
                    if pt.r.len() != dim || pt.p.len() != dim {
                        return Err(("points", format!("initial points need {dim} components for r and p")));
                    }
                }
            }
            if let InitialsSpec::RandomRegular { j_min, j_max, .. } = init {
                if !(j_min > &0.0 && j_max >= j_min) {
                    return Err(("j_min", format!("need 0 < j_min ≤ j_max, got [{j_min}, {j_max}]")));
                }
            }
        }
        if let Some(s) = &self.shift {
            finite("shift", &[&s.theta[..], &s.p0[..], &[s.e_mag]].concat())?;
            if s.p0.iter().any(|p| *p <= 0.0) || s.e_mag <= 0.0 {
                return Err(("shift", "shift needs p0 > 0 and e_mag > 0".into()));
            }
        }
        if let Some(c) = &self.closure {
            finite("closure", &[c.step, c.tolerance, c.r_range[0], c.r_range[1], c.p_range[0], c.p_range[1]])?;
            if c.step <= 0.0 || c.r_range[0] <= 0.0 || c.p_range[0] <= 0.0 || c.r_range[1] < c.r_range[0] || c.p_range[1] < c.p_range[0] {
                return Err(("closure", "closure needs step > 0 and positive, ordered ranges".into()));
            }
        }
        if let Some(b) = &self.brackets {
            if !(b.step > 0.0 && b.step.is_finite()) {
                return Err(("brackets", format!("bracket step must be positive, got {}", b.step)));
            }
        }
        Ok(())
    }

    /// Requirements specific to `experiment`, applied once it is known.
    pub fn validate_for(&self, experiment: Experiment) -> Result<(), String> {
        let needs_model = !matches!(experiment, Experiment::Shift);
        if needs_model && self.model.is_none() {
            return Err(format!("{} needs a [model] table", experiment.as_str()));
        }
        let needs_initials = matches!(experiment, Experiment::Simulate | Experiment::Scatter | Experiment::Capture);
        if needs_initials && self.initials.as_ref().is_none_or(InitialsSpec::is_empty) {
            return Err("no initial conditions".into());
        }
        if experiment == Experiment::Simulate {
            if let Some(InitialsSpec::Explicit { points }) = &self.initials {
                if points.len() != 1 {
                    return Err(format!("simulate takes exactly one initial condition, got {}", points.len()));
                }
            }
        }
        if matches!(experiment, Experiment::Capture) && !matches!(self.model, Some(ModelSpec::DoubleMonopole { .. })) {
            return Err("capture needs the double_monopole model".into());
        }
        if matches!(experiment, Experiment::Scatter | Experiment::Capture | Experiment::ClosureCheck) && self.model.as_ref().is_some_and(ModelSpec::is_planar) {
            return Err(format!("{} needs a three-dimensional model", experiment.as_str()));
        }
        if matches!(self.initials, Some(InitialsSpec::AngularMomentum { .. }) | Some(InitialsSpec::RandomRegular { .. }))
            && !matches!(self.model, Some(ModelSpec::DoubleMonopole { .. }))
        {
            return Err("angular-momentum initials need the double_monopole model".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCATTER: &str = r#"
experiment = "scatter"
t_end = 20.0

[model]
name = "double_monopole"
e = 1.0
theta = 1.0

[initials]
kind = "angular_momentum"
j = [2.05, 2.0, 2.5]
alpha = 1.0
p = 1.0
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::from_toml(SCATTER).unwrap();
        assert_eq!(cfg.experiment, Some(Experiment::Scatter));
        assert_eq!(cfg.integrator, IntegratorOptions::default());
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn unknown_key_is_reported_with_its_line() {
        let src = SCATTER.replace("theta = 1.0", "theta = 1.0\nthetta = 2.0");
        let err = ExperimentConfig::from_toml(&src).unwrap_err();
        assert!(err.message.contains("thetta"), "{err}");
        assert_eq!(err.line, Some(9));
        assert!(err.column.is_some());
    }

    #[test]
    fn non_finite_parameter_is_rejected() {
        let src = SCATTER.replace("e = 1.0", "e = nan");
        let err = ExperimentConfig::from_toml(&src).unwrap_err();
        assert!(err.message.contains("finite"), "{err}");
        assert_eq!(err.line, Some(7));
    }

    #[test]
    fn empty_initials_fail_experiment_validation() {
        let src = SCATTER.replace("[2.05, 2.0, 2.5]", "[]");
        let cfg = ExperimentConfig::from_toml(&src).unwrap();
        assert_eq!(cfg.validate_for(Experiment::Scatter).unwrap_err(), "no initial conditions");
    }

    #[test]
    fn planar_points_need_two_components() {
        let src = r#"
[model]
name = "exotic_planar"
m = 1.0
e = 1.0
theta = 0.5
b = { kind = "constant", value = 1.0 }
v = { kind = "constant", value = 0.0 }

[initials]
kind = "explicit"
points = [{ r = [0.0, 0.0, 0.0], p = [1.0, 0.0, 0.0] }]
"#;
        let err = ExperimentConfig::from_toml(src).unwrap_err();
        assert_eq!(err.line, Some(12), "{err}");
    }
}
