//! Run configuration: one JSON document, patched by `--set path=value` overrides.

use std::fmt;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use resolab_core::contour_quad::{SemiInfiniteMap, SemiInfiniteSpec};
use resolab_core::friedrichs::{ContourSettings, Family, FormFactor, FriedrichsModel, StateCoefficients};
use resolab_core::perturbation::DiscreteModel;
use resolab_core::testspace::{HardyOptions, TestFunctionSpec};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Malformed or out-of-range input, with the dotted path of the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl fmt::Display) -> Self {
        Self {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelBlock,
    pub quadrature: QuadratureBlock,
    pub contour: ContourSettings,
    pub experiment: ExperimentBlock,
    pub output: OutputBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelBlock {
    pub omega1: f64,
    pub lambda: f64,
    pub form_factor: Family,
}

impl Default for ModelBlock {
    fn default() -> Self {
        Self {
            omega1: 1.0,
            lambda: 0.1,
            form_factor: Family::Lorentzian,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureBlock {
    pub n: usize,
    pub cutoff: f64,
    pub map: SemiInfiniteMap,
}

impl Default for QuadratureBlock {
    fn default() -> Self {
        let s = SemiInfiniteSpec::default();
        Self {
            n: s.n,
            cutoff: s.cutoff,
            map: s.map,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentBlock {
    /// Half-width of the symmetric time grid in lifetimes `1/Γ` (plain time units when `Γ = 0`).
    pub time_span: f64,
    pub time_points: usize,
    /// Explicit times; replaces the symmetric grid.
    pub times: Option<Vec<f64>>,
    /// Couplings swept by `sumcheck` and `probe`.
    pub lambdas: Vec<f64>,
    /// Energy of the incoming wave for `born`.
    pub omega: f64,
    pub order: usize,
    pub tolerance: f64,
    pub discrete: Option<DiscreteBlock>,
    pub test_function: Option<TestFunctionSpec>,
    /// CSV of `E, Re φ, Im φ` rows; replaces `test_function`.
    pub samples_csv: Option<PathBuf>,
    pub hardy: HardyOptions,
    pub t_list: Vec<f64>,
    pub y_grid: Vec<f64>,
    /// States for `unity`; each defaults to the bare level.
    pub phi: Option<StateCoefficients>,
    pub psi: Option<StateCoefficients>,
}

impl Default for ExperimentBlock {
    fn default() -> Self {
        Self {
            time_span: 10.0,
            time_points: 201,
            times: None,
            lambdas: vec![0.02, 0.05, 0.1, 0.2],
            omega: 2.0,
            order: 20,
            tolerance: 1e-12,
            discrete: None,
            test_function: None,
            samples_csv: None,
            hardy: HardyOptions::default(),
            t_list: vec![-10.0, -1.0, 0.0, 1.0, 10.0],
            y_grid: vec![0.1, 0.2, 0.3, 0.4],
            phi: None,
            psi: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteBlock {
    pub h0_diag: Vec<f64>,
    pub w_matrix: Vec<Vec<Complex64>>,
    /// Defaults to `model.lambda`.
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub level: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    /// Data file; standard output when absent.
    pub path: Option<PathBuf>,
    pub format: Format,
    /// Significant digits of floats in CSV files.
    pub precision: usize,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            path: None,
            format: Format::Csv,
            precision: 17,
        }
    }
}

/// Sets `root[a][b]… = value` for a dotted path, creating objects on the way.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), ConfigError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError::new("", format!("override `{assignment}` is not of the form path=value")))?;
    let path = path.trim();
    if path.is_empty() {
        return Err(ConfigError::new("", "override with an empty path"));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        let obj = match node {
            Value::Object(m) => m,
            Value::Null => {
                *node = Value::Object(Default::default());
                node.as_object_mut().unwrap()
            }
            _ => return Err(ConfigError::new(keys[..i].join("."), "is not an object")),
        };
        if i + 1 == keys.len() {
            obj.insert((*key).to_string(), value);
            return Ok(());
        }
        node = obj.entry((*key).to_string()).or_insert(Value::Null);
    }
    unreachable!()
}

impl RunConfig {
    /// Reads `path` (or starts from defaults), applies overrides, parses and validates.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut root = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| ConfigError::new("", format!("invalid JSON: {e}")))?
            }
            None => Value::Object(Default::default()),
        };
        for o in overrides {
            apply_override(&mut root, o)?;
        }
        let cfg = Self::from_value(root)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_value(root: Value) -> Result<Self, ConfigError> {
        serde_path_to_error::deserialize(root).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::new(if path == "." { String::new() } else { path }, e.into_inner())
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.model()?;
        let e = &self.experiment;
        if !(e.time_span > 0.0 && e.time_span.is_finite()) {
            return Err(ConfigError::new("experiment.time_span", "must be positive"));
        }
        if e.time_points == 0 {
            return Err(ConfigError::new("experiment.time_points", "must be at least 1"));
        }
        if let Some(ts) = &e.times {
            if ts.is_empty() || ts.iter().any(|t| !t.is_finite()) {
                return Err(ConfigError::new("experiment.times", "must be a non-empty list of finite times"));
            }
        }
        if e.lambdas.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return Err(ConfigError::new("experiment.lambdas", "entries must lie in [0, 1]"));
        }
        if !(e.omega > 0.0) {
            return Err(ConfigError::new("experiment.omega", "must be positive"));
        }
        if !(e.tolerance > 0.0) {
            return Err(ConfigError::new("experiment.tolerance", "must be positive"));
        }
        if e.order == 0 {
            return Err(ConfigError::new("experiment.order", "must be at least 1"));
        }
        if let Some(d) = &e.discrete {
            self.discrete_model(d)?;
        }
        if let Some(spec) = &e.test_function {
            spec.validate()
                .map_err(|err| ConfigError::new("experiment.test_function", err))?;
        }
        if e.hardy.y_grid.is_empty() || e.hardy.y_grid.iter().any(|y| !(*y > 0.0)) {
            return Err(ConfigError::new("experiment.hardy.y_grid", "entries must be positive"));
        }
        if !e.hardy.points.is_power_of_two() || e.hardy.points < 64 {
            return Err(ConfigError::new("experiment.hardy.points", "must be a power of two of at least 64"));
        }
        if e.t_list.iter().any(|t| !t.is_finite()) {
            return Err(ConfigError::new("experiment.t_list", "entries must be finite"));
        }
        if e.y_grid.is_empty() || e.y_grid.iter().any(|y| !(*y >= 0.0)) {
            return Err(ConfigError::new("experiment.y_grid", "entries must be non-negative"));
        }
        if !(1..=17).contains(&self.output.precision) {
            return Err(ConfigError::new("output.precision", "must lie in 1..=17"));
        }
        Ok(())
    }

    pub fn quad(&self) -> SemiInfiniteSpec {
        SemiInfiniteSpec {
            n: self.quadrature.n,
            cutoff: self.quadrature.cutoff,
            map: self.quadrature.map,
        }
    }

    pub fn model(&self) -> Result<FriedrichsModel, ConfigError> {
        let quad = self.quad();
        quad.validate().map_err(|e| ConfigError::new("quadrature", e))?;
        let ff = FormFactor::new(self.model.form_factor, self.model.lambda)
            .map_err(|e| ConfigError::new("model", e))?;
        FriedrichsModel::new(self.model.omega1, ff, quad, self.contour).map_err(|e| ConfigError::new("model", e))
    }

    pub fn discrete_model(&self, d: &DiscreteBlock) -> Result<DiscreteModel, ConfigError> {
        let m = DiscreteModel::new(
            d.h0_diag.clone(),
            d.w_matrix.clone(),
            d.lambda.unwrap_or(self.model.lambda),
        )
        .map_err(|e| ConfigError::new("experiment.discrete", e))?;
        if d.level >= m.dim() {
            return Err(ConfigError::new("experiment.discrete.level", "out of range"));
        }
        Ok(m)
    }
}
