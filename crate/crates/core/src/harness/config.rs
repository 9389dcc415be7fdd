//! Scenario documents: a single JSON object with `model`, `grid`, `mc` and `outputs`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filipovic::{FilipovicSpace, KernelFrame, DEFAULT_GRID_POINTS, DEFAULT_X_MAX};
use crate::operator::{Covariance, HVector, OperatorMatrix};
use crate::ou::{OuSpec, TimeGrid};
use crate::variance::UnitProcess;
use crate::vol_ou::XSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ModelSpec,
    pub grid: GridSpec,
    pub mc: McSpec,
    #[serde(default)]
    pub outputs: Vec<OutputRequest>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub t_end: f64,
    pub steps: usize,
}

/// Monte Carlo controls. The seed is mandatory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    pub path_count: usize,
    pub seed: u64,
}

/// A square operator: dense row-major rows or a named factory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Dense(Vec<Vec<f64>>),
    Factory(Factory),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "factory", rename_all = "snake_case", deny_unknown_fields)]
pub enum Factory {
    Diagonal { values: Vec<f64> },
    Identity {
        #[serde(default = "one")]
        scale: f64,
    },
    Zero,
    /// Compressed shift semigroup generator on the model's Filipovic frame.
    ShiftOnFilipovic,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub a: MatrixSpec,
    pub eta: MatrixSpec,
    pub q_w: MatrixSpec,
    pub y0: Vec<f64>,
    #[serde(default)]
    pub volatility: Option<VolatilitySpec>,
    #[serde(default)]
    pub filipovic: Option<FilipovicSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolatilitySpec {
    pub c: MatrixSpec,
    pub q_b: MatrixSpec,
    pub x0: Vec<f64>,
    pub unit: UnitProcess,
}

/// Forward-curve geometry; the model dimension equals the number of knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilipovicSpec {
    pub alpha: f64,
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    pub knots: Vec<f64>,
}

fn default_x_max() -> f64 {
    DEFAULT_X_MAX
}

fn default_points() -> usize {
    DEFAULT_GRID_POINTS
}

/// A requested quantity. `t` defaults to `grid.t_end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "quantity", deny_unknown_fields)]
pub enum OutputRequest {
    #[serde(rename = "char_Y")]
    CharY { f: Vec<f64>, t: Option<f64> },
    #[serde(rename = "char_V")]
    CharV { f: Vec<f64>, g: Vec<f64>, t: Option<f64> },
    #[serde(rename = "cov_Y")]
    CovY { t: Option<f64> },
    #[serde(rename = "cov_X")]
    CovX { t: Option<f64> },
    #[serde(rename = "forward_cov")]
    ForwardCov { x: f64, y: f64, t: Option<f64> },
    #[serde(rename = "project_cir")]
    ProjectCir { f: Vec<f64>, lambda: f64, t: Option<f64> },
    #[serde(rename = "validate_all")]
    ValidateAll {},
}

impl OutputRequest {
    pub fn name(&self) -> &'static str {
        match self {
            Self::CharY { .. } => "char_Y",
            Self::CharV { .. } => "char_V",
            Self::CovY { .. } => "cov_Y",
            Self::CovX { .. } => "cov_X",
            Self::ForwardCov { .. } => "forward_cov",
            Self::ProjectCir { .. } => "project_cir",
            Self::ValidateAll {} => "validate_all",
        }
    }
}

fn config_error(path: impl Into<String>, message: impl ToString) -> Error {
    Error::Config {
        path: path.into(),
        message: message.to_string(),
    }
}

/// Parses a scenario, reporting the JSON path of the first offending field.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        config_error(path, e.into_inner())
    })?;
    config.grid()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| config_error(path.display().to_string(), e))?;
    parse_config(&text)
}

impl ScenarioConfig {
    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.grid.t_end, self.grid.steps).map_err(|e| config_error("grid", e))
    }
}

/// Operators built from a [`ModelSpec`].
#[derive(Debug, Clone)]
pub struct Model {
    pub ou: OuSpec,
    pub x: Option<XSpec>,
    pub frame: Option<KernelFrame>,
}

impl Model {
    pub fn dim(&self) -> usize {
        self.ou.dim()
    }
}

impl MatrixSpec {
    fn resolve(&self, n: usize, frame: Option<&KernelFrame>, path: &str) -> Result<OperatorMatrix> {
        match self {
            Self::Dense(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(config_error(path, format!("expected a {n}x{n} row-major matrix")));
                }
                Ok(OperatorMatrix::from_fn(n, n, |i, j| rows[i][j]))
            }
            Self::Factory(Factory::Diagonal { values }) => {
                if values.len() != n {
                    return Err(config_error(path, format!("expected {n} diagonal values, found {}", values.len())));
                }
                Ok(OperatorMatrix::from_diagonal(&HVector::from_column_slice(values)))
            }
            Self::Factory(Factory::Identity { scale }) => Ok(OperatorMatrix::identity(n, n) * *scale),
            Self::Factory(Factory::Zero) => Ok(OperatorMatrix::zeros(n, n)),
            Self::Factory(Factory::ShiftOnFilipovic) => frame
                .ok_or_else(|| config_error(path, "shift_on_filipovic needs a `model.filipovic` section"))?
                .shift_generator()
                .map_err(|e| config_error(path, e)),
        }
    }

    fn covariance(&self, n: usize, frame: Option<&KernelFrame>, path: &str) -> Result<Covariance> {
        Covariance::new(self.resolve(n, frame, path)?).map_err(|e| config_error(path, e))
    }
}

fn vector(values: &[f64], n: usize, path: &str) -> Result<HVector> {
    if values.len() != n {
        return Err(config_error(path, format!("expected {n} entries, found {}", values.len())));
    }
    Ok(HVector::from_column_slice(values))
}

impl ModelSpec {
    pub fn dim(&self) -> usize {
        self.y0.len()
    }

    pub fn build(&self) -> Result<Model> {
        let n = self.dim();
        if n == 0 {
            return Err(config_error("model.y0", "model dimension must be at least 1"));
        }
        let frame = match &self.filipovic {
            Some(fs) => {
                let space = FilipovicSpace::new(fs.alpha, fs.x_max, fs.points)
                    .map_err(|e| config_error("model.filipovic", e))?;
                if fs.knots.len() != n {
                    return Err(config_error(
                        "model.filipovic.knots",
                        format!("expected {n} knots (one per model dimension), found {}", fs.knots.len()),
                    ));
                }
                Some(KernelFrame::new(space, &fs.knots).map_err(|e| config_error("model.filipovic.knots", e))?)
            }
            None => None,
        };
        let f = frame.as_ref();
        let ou = OuSpec::new(
            self.a.resolve(n, f, "model.a")?,
            self.eta.resolve(n, f, "model.eta")?,
            self.q_w.covariance(n, f, "model.q_w")?,
            vector(&self.y0, n, "model.y0")?,
        )
        .map_err(|e| config_error("model", e))?;
        let x = match &self.volatility {
            Some(v) => Some(
                XSpec::new(
                    v.c.resolve(n, f, "model.volatility.c")?,
                    v.q_b.covariance(n, f, "model.volatility.q_b")?,
                    vector(&v.x0, n, "model.volatility.x0")?,
                    v.unit.clone(),
                    ou.clone(),
                )
                .map_err(|e| config_error("model.volatility", e))?,
            ),
            None => None,
        };
        Ok(Model { ou, x, frame })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCALAR: &str = r#"{
        "model": {
            "a": [[-1.0]], "eta": [[1.0]], "q_w": {"factory": "identity"}, "y0": [1.0],
            "volatility": {"c": [[-1.0]], "q_b": [[1.0]], "x0": [0.0], "unit": {"constant": [1.0]}}
        },
        "grid": {"t_end": 1.0, "steps": 100},
        "mc": {"path_count": 1000, "seed": 7},
        "outputs": [{"quantity": "cov_Y"}, {"quantity": "char_Y", "f": [1.0]}]
    }"#;

    #[test]
    fn parses_and_builds() {
        let cfg = parse_config(SCALAR).unwrap();
        assert_eq!(cfg.outputs.len(), 2);
        assert_eq!(cfg.outputs[1].name(), "char_Y");
        let model = cfg.model.build().unwrap();
        assert_eq!(model.dim(), 1);
        assert!(model.x.is_some() && model.frame.is_none());
    }

    #[test]
    fn errors_carry_field_paths() {
        let no_seed = SCALAR.replace(r#", "seed": 7"#, "");
        match parse_config(&no_seed) {
            Err(Error::Config { path, message }) => {
                assert_eq!(path, "mc");
                assert!(message.contains("seed"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let bad_rows = parse_config(&SCALAR.replace(r#""a": [[-1.0]]"#, r#""a": [[-1.0, 0.0]]"#)).unwrap();
        assert!(matches!(bad_rows.model.build(), Err(Error::Config { path, .. }) if path == "model.a"));
        let asym = parse_config(&SCALAR.replace(r#""q_b": [[1.0]]"#, r#""q_b": [[-1.0]]"#)).unwrap();
        assert!(matches!(asym.model.build(), Err(Error::Config { path, .. }) if path == "model.volatility.q_b"));
        let unknown = SCALAR.replace(r#""quantity": "cov_Y""#, r#""quantity": "cov_Z""#);
        assert!(matches!(parse_config(&unknown), Err(Error::Config { .. })));
    }

    #[test]
    fn shift_factory_requires_geometry() {
        let cfg = parse_config(&SCALAR.replace(r#""a": [[-1.0]]"#, r#""a": {"factory": "shift_on_filipovic"}"#)).unwrap();
        assert!(matches!(cfg.model.build(), Err(Error::Config { path, .. }) if path == "model.a"));
        let with_geom = SCALAR
            .replace(r#""a": [[-1.0]]"#, r#""a": {"factory": "shift_on_filipovic"}"#)
            .replace(r#""y0": [1.0],"#, r#""y0": [1.0], "filipovic": {"alpha": 0.1, "knots": [1.0]},"#);
        let model = parse_config(&with_geom).unwrap().model.build().unwrap();
        assert_eq!(model.frame.unwrap().dim(), 1);
    }
}
