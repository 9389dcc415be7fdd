//! Real-valued projections `v(t; f) = ⟨V(t) f, f⟩` and the eigenvector CIR case.

use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::mc::par_map;
use crate::operator::{tensor_square, HVector, OperatorMatrix};
use crate::ou::{EulerY, OuSpec, PathEnsemble, TimeGrid};
use crate::variance::tensor_sde_step;

/// Relative tolerance for the eigenvector check in [`cir_params`].
pub const EIGEN_TOL: f64 = 1e-8;

/// `𝓛_f(T) = ⟨T f, f⟩`.
pub fn project(t: &OperatorMatrix, f: &HVector) -> f64 {
    (t * f).dot(f)
}

/// `|Q_W^{1/2} η* f|`, the volatility of `⟨Y, f⟩`.
pub fn projected_sigma(spec: &OuSpec, f: &HVector) -> f64 {
    (spec.diffusion().transpose() * f).norm()
}

/// One step of a projected path: the Euler value of `v` and the identity value `⟨Y_k, f⟩²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectedStep {
    pub v: f64,
    pub identity: f64,
}

fn projected_path_with<F: FnMut(ProjectedStep)>(
    spec: &OuSpec,
    f: &HVector,
    grid: &TimeGrid,
    seed: u64,
    path: u64,
    mut visit: F,
) -> ProjectedStep {
    let dt = grid.dt();
    let a_star_f = spec.generator().transpose() * f;
    let shifted_f = &a_star_f - f;
    let sigma = projected_sigma(spec, f);
    let b = sigma * sigma;
    let mut euler = EulerY::new(spec, dt, seed, path);
    let mut y = spec.y0().clone();
    let mut v_op = tensor_square(&y);
    let mut v = project(&v_op, f);
    let mut step = ProjectedStep {
        v,
        identity: y.dot(f).powi(2),
    };
    visit(step);
    for _ in 0..grid.steps() {
        let dw = euler.draw_increment();
        let p = y.dot(f);
        // dw = sign⟨Y,f⟩ ⟨dW, η* f⟩ / σ: the scalar Wiener increment carried by the projection
        let zeta_sqrt_dt = if sigma > 0.0 {
            p.signum() * dw.dot(f) / sigma
        } else {
            0.0
        };
        let drift = v + b + project(&v_op, &a_star_f) - project(&v_op, &shifted_f);
        v += drift * dt + 2.0 * sigma * v.max(0.0).sqrt() * zeta_sqrt_dt;
        v_op = tensor_sde_step(spec, &y, &v_op, &dw, dt).1;
        euler.advance(&dw);
        y.copy_from(euler.state());
        step = ProjectedStep {
            v,
            identity: y.dot(f).powi(2),
        };
        visit(step);
    }
    step
}

/// One path of the projected scheme, co-simulated with `(Y, V)`.
///
/// `v` follows full-truncation Euler for
/// `dv = (v + b + 𝓛_{A*f}(V) − 𝓛_{(A*−Id)f}(V)) dt + 2σ √v dw`, `σ = |Q_W^{1/2} η* f|`, `b = σ²`.
pub fn projected_path(spec: &OuSpec, f: &HVector, grid: &TimeGrid, seed: u64, path: u64) -> Result<Vec<ProjectedStep>> {
    check_dim("projection f", spec.dim(), f.len())?;
    let mut out = Vec::with_capacity(grid.steps() + 1);
    projected_path_with(spec, f, grid, seed, path, |s| out.push(s));
    Ok(out)
}

pub fn simulate_v_proj(spec: &OuSpec, f: &HVector, grid: &TimeGrid, count: usize, seed: u64) -> Result<PathEnsemble<f64>> {
    check_dim("projection f", spec.dim(), f.len())?;
    let paths = par_map(count, |p| {
        let mut out = Vec::with_capacity(grid.steps() + 1);
        projected_path_with(spec, f, grid, seed, p as u64, |s| out.push(s.v));
        out
    });
    Ok(PathEnsemble {
        grid: *grid,
        seed,
        paths,
    })
}

/// Terminal values of `count` projected paths, without storing the paths.
pub fn terminal_v_proj(spec: &OuSpec, f: &HVector, grid: &TimeGrid, count: usize, seed: u64) -> Result<Vec<ProjectedStep>> {
    check_dim("projection f", spec.dim(), f.len())?;
    Ok(par_map(count, |p| projected_path_with(spec, f, grid, seed, p as u64, |_| {})))
}

/// Root mean square of `v(T) − ⟨Y(T), f⟩²` over `count` paths.
pub fn projection_rms_error(spec: &OuSpec, f: &HVector, grid: &TimeGrid, count: usize, seed: u64) -> Result<f64> {
    let ends = terminal_v_proj(spec, f, grid, count, seed)?;
    let ms = ends.iter().map(|s| (s.v - s.identity).powi(2)).sum::<f64>() / ends.len().max(1) as f64;
    Ok(ms.sqrt())
}

/// Coefficients of `dv = (b + κ v) dt + ξ √v dw`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CirParams {
    pub b: f64,
    pub kappa: f64,
    pub xi: f64,
    pub v0: f64,
}

/// CIR coefficients of `⟨Y, f⟩²` when `f` is an eigenvector of `A*` with eigenvalue `lambda`.
pub fn cir_params(spec: &OuSpec, f: &HVector, lambda: f64) -> Result<CirParams> {
    check_dim("cir_params f", spec.dim(), f.len())?;
    let residual = (spec.generator().transpose() * f - f * lambda).norm();
    if residual > EIGEN_TOL * f.norm() {
        return Err(Error::Precondition(format!(
            "f is not an eigenvector of A* for eigenvalue {lambda} (residual {residual:.3e})"
        )));
    }
    let b = projected_sigma(spec, f).powi(2);
    Ok(CirParams {
        b,
        kappa: 2.0 * lambda,
        xi: 2.0 * b.sqrt(),
        v0: spec.y0().dot(f).powi(2),
    })
}

/// First moment `m' = b + κ m`, `m(0) = V0`.
pub fn cir_mean(params: &CirParams, t: f64) -> f64 {
    let CirParams { b, kappa, v0, .. } = *params;
    if kappa.abs() < 1e-12 {
        return b * t + v0;
    }
    let e = (kappa * t).exp();
    e * v0 + b * (e - 1.0) / kappa
}
