//! Executes the requested quantities of a scenario and collects [`ResultRecord`]s.

use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{Model, OutputRequest, ScenarioConfig};
use super::validate::validate_model;
use crate::analytics::{char_v, char_y, empirical_char_v, empirical_char_y};
use crate::error::{Error, Result};
use crate::filipovic::{forward_cov, ForwardMc};
use crate::mc::{par_map, Estimate};
use crate::operator::{HVector, OperatorMatrix};
use crate::ou::{cov_y, default_quad_steps, sample_y_exact};
use crate::projection::{cir_mean, cir_params, terminal_v_proj};
use crate::vol_ou::{cov_x, terminal_x, XSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    Mc,
    Both,
}

/// One output row. Monte Carlo records carry `stderr` and `paths`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRecord {
    pub name: String,
    pub args: Value,
    pub value: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<Value>,
    pub provenance: Provenance,
    pub wall_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// When false every `wall_ms` is written as 0 so reruns are byte-identical.
    pub timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { timing: true }
    }
}

struct Outcome {
    value: Value,
    stderr: Option<Value>,
    provenance: Provenance,
    paths: Option<usize>,
}

pub(crate) fn rows(m: &OperatorMatrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn complex(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

fn vector(values: &[f64], n: usize, what: &str) -> Result<HVector> {
    if values.len() != n {
        return Err(Error::Precondition(format!(
            "{what} has {} entries, model dimension is {n}",
            values.len()
        )));
    }
    Ok(HVector::from_column_slice(values))
}

fn vol_model(model: &Model) -> Result<&XSpec> {
    model
        .x
        .as_ref()
        .ok_or_else(|| Error::Precondition("this quantity needs a `model.volatility` section".into()))
}

/// Entrywise sample covariance and its standard errors.
fn covariance_with_errors(samples: &[HVector]) -> (OperatorMatrix, OperatorMatrix) {
    let n = samples.first().map_or(0, |s| s.len());
    let count = samples.len();
    let mean = samples.iter().fold(HVector::zeros(n), |acc, s| acc + s) / count.max(1) as f64;
    let mut cov = OperatorMatrix::zeros(n, n);
    let mut se = OperatorMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let prods: Vec<f64> = samples.iter().map(|s| (s[i] - mean[i]) * (s[j] - mean[j])).collect();
            let e = Estimate::from_samples(&prods);
            let bessel = count as f64 / (count.max(2) - 1) as f64;
            cov[(i, j)] = e.mean * bessel;
            se[(i, j)] = e.stderr * bessel;
        }
    }
    (cov, se)
}

fn evaluate(config: &ScenarioConfig, model: &Model, request: &OutputRequest) -> Result<Outcome> {
    let n = model.dim();
    let paths = config.mc.path_count;
    let seed = config.mc.seed;
    let horizon = |t: &Option<f64>| t.unwrap_or(config.grid.t_end);
    match request {
        OutputRequest::CharY { f, t } => {
            let t = horizon(t);
            let f = vector(f, n, "f")?;
            let quad = default_quad_steps(t);
            let closed = char_y(&model.ou, t, &f, quad)?;
            let samples = sample_y_exact(&model.ou, t, paths, seed, quad)?;
            let est = empirical_char_y(&samples, &f);
            Ok(Outcome {
                value: json!({ "closed_form": complex(closed), "mc": complex(est.value()) }),
                stderr: Some(json!({ "re": est.re.stderr, "im": est.im.stderr })),
                provenance: Provenance::Both,
                paths: Some(paths),
            })
        }
        OutputRequest::CharV { f, g, t } => {
            let t = horizon(t);
            let f = vector(f, n, "f")?;
            let g = vector(g, n, "g")?;
            let quad = default_quad_steps(t);
            let closed = char_v(&model.ou, t, &f, &g, quad)?;
            let samples = sample_y_exact(&model.ou, t, paths, seed, quad)?;
            let est = empirical_char_v(&samples, &f, &g);
            Ok(Outcome {
                value: json!({ "closed_form": complex(closed), "mc": complex(est.value()) }),
                stderr: Some(json!({ "re": est.re.stderr, "im": est.im.stderr })),
                provenance: Provenance::Both,
                paths: Some(paths),
            })
        }
        OutputRequest::CovY { t } => {
            let t = horizon(t);
            let q = cov_y(&model.ou, t, default_quad_steps(t))?;
            Ok(Outcome {
                value: json!(rows(q.matrix())),
                stderr: None,
                provenance: Provenance::ClosedForm,
                paths: None,
            })
        }
        OutputRequest::CovX { t } => {
            let x = vol_model(model)?;
            let t = horizon(t);
            let grid = crate::ou::TimeGrid::new(t, config.grid.steps)?;
            let ends: Vec<HVector> = par_map(paths, |p| terminal_x(x, &grid, seed, p as u64).x);
            let (mc, se) = covariance_with_errors(&ends);
            let closed = match x.unit().gamma() {
                Some(_) => Some(rows(cov_x(x, t, default_quad_steps(t))?.matrix())),
                None => None,
            };
            let provenance = if closed.is_some() { Provenance::Both } else { Provenance::Mc };
            Ok(Outcome {
                value: json!({ "closed_form": closed, "mc": rows(&mc) }),
                stderr: Some(json!(rows(&se))),
                provenance,
                paths: Some(paths),
            })
        }
        OutputRequest::ForwardCov { x, y, t } => {
            let spec = vol_model(model)?;
            let frame = model
                .frame
                .as_ref()
                .ok_or_else(|| Error::Precondition("forward_cov needs a `model.filipovic` section".into()))?;
            let t = horizon(t);
            let mc = ForwardMc {
                steps: config.grid.steps,
                paths,
                seed,
                quad_steps: default_quad_steps(t),
            };
            let out = forward_cov(spec, frame, t, *x, *y, &mc)?;
            let provenance = if out.closed_form.is_some() { Provenance::Both } else { Provenance::Mc };
            Ok(Outcome {
                value: json!({ "closed_form": out.closed_form, "mc": out.mc.mean }),
                stderr: Some(json!(out.mc.stderr)),
                provenance,
                paths: Some(paths),
            })
        }
        OutputRequest::ProjectCir { f, lambda, t } => {
            let t = horizon(t);
            let f = vector(f, n, "f")?;
            let params = cir_params(&model.ou, &f, *lambda)?;
            let grid = crate::ou::TimeGrid::new(t, config.grid.steps)?;
            let ends = terminal_v_proj(&model.ou, &f, &grid, paths, seed)?;
            let est = Estimate::from_samples(&ends.iter().map(|s| s.v).collect::<Vec<_>>());
            Ok(Outcome {
                value: json!({ "params": params, "cir_mean": cir_mean(&params, t), "mc_mean": est.mean }),
                stderr: Some(json!(est.stderr)),
                provenance: Provenance::Both,
                paths: Some(paths),
            })
        }
        OutputRequest::ValidateAll {} => {
            let report = validate_model(config, model);
            Ok(Outcome {
                value: serde_json::to_value(&report).expect("report serializes"),
                stderr: None,
                provenance: Provenance::Both,
                paths: Some(paths),
            })
        }
    }
}

fn args_of(request: &OutputRequest) -> Value {
    let mut v = serde_json::to_value(request).expect("request serializes");
    if let Value::Object(map) = &mut v {
        map.remove("quantity");
    }
    v
}

/// Runs the requests accepted by `filter`; numerical failures become error records.
pub fn run_selected(
    config: &ScenarioConfig,
    model: &Model,
    options: RunOptions,
    filter: impl Fn(&OutputRequest) -> bool,
) -> Vec<ResultRecord> {
    config
        .outputs
        .iter()
        .filter(|r| filter(r))
        .map(|request| {
            let start = Instant::now();
            let outcome = evaluate(config, model, request);
            let wall_ms = if options.timing {
                start.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            };
            let name = request.name().to_string();
            let args = args_of(request);
            match outcome {
                Ok(o) => ResultRecord {
                    name,
                    args,
                    value: o.value,
                    stderr: o.stderr,
                    provenance: o.provenance,
                    wall_ms,
                    paths: o.paths,
                    error: None,
                },
                Err(e) => ResultRecord {
                    name,
                    args,
                    value: Value::Null,
                    stderr: None,
                    provenance: Provenance::ClosedForm,
                    wall_ms,
                    paths: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

/// Builds the model and runs every requested quantity.
pub fn run_scenario(config: &ScenarioConfig, options: RunOptions) -> Result<Vec<ResultRecord>> {
    let model = config.model.build()?;
    Ok(run_selected(config, &model, options, |_| true))
}
