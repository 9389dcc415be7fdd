//! The tensor variance process `V = Y ⊗ Y`.
//!
//! `V(t)` is a rank-one, symmetric, positive semi-definite Hilbert-Schmidt
//! operator with `‖V‖ = |Y|²` and an explicit square root `|Y|⁻¹ V`. For any
//! unit vector `Z`, the factor `Γ_Z = Z ⊗ Y` satisfies `Γ_Z Γ_Z* = V`, which is
//! the volatility fed into the `X` dynamics.
//!
//! For a bounded generator `A` the Itô dynamics are
//! `dV = Φ dt + Ψ dW` with `Φ = AY⊗Y + Y⊗AY + ηQ_Wη*` and
//! `Ψ(h) = ηh⊗Y + Y⊗ηh`. [`tensor_sde_step`] discretizes this by Euler on the
//! same noise as the `Y` update; the discretized `V` leaves the rank-one set
//! and is stored densely.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::mc::par_map;
use crate::operator::{basis, tensor_square, HVector, OperatorMatrix};
use crate::ou::{EulerY, OuSpec, PathEnsemble, TimeGrid};

/// Tolerance on `|Z| = 1` for unit processes.
pub const UNIT_TOL: f64 = 1e-12;

/// `V = Y ⊗ Y` stored through its factor; the dense matrix is built on first use.
#[derive(Debug, Clone)]
pub struct TensorVariance {
    factor: HVector,
    materialized: OnceLock<OperatorMatrix>,
}

impl TensorVariance {
    pub fn factor(&self) -> &HVector {
        &self.factor
    }

    pub fn matrix(&self) -> &OperatorMatrix {
        self.materialized.get_or_init(|| tensor_square(&self.factor))
    }

    /// `‖V‖ = |Y|²`.
    pub fn hs_norm(&self) -> f64 {
        self.factor.norm_squared()
    }

    /// `V f = ⟨Y, f⟩ Y`.
    pub fn apply(&self, f: &HVector) -> HVector {
        &self.factor * self.factor.dot(f)
    }

    /// `⟨⟨V, T⟩⟩ = ⟨T Y, Y⟩`.
    pub fn hs_inner(&self, t: &OperatorMatrix) -> f64 {
        self.factor.dot(&(t * &self.factor))
    }

    pub fn is_materialized(&self) -> bool {
        self.materialized.get().is_some()
    }
}

pub fn variance_of(y: &HVector) -> TensorVariance {
    TensorVariance {
        factor: y.clone(),
        materialized: OnceLock::new(),
    }
}

/// `V^{1/2} = |Y|⁻¹ V`, and `0` when `Y = 0`.
pub fn sqrt_v(v: &TensorVariance) -> OperatorMatrix {
    f_map(v.factor())
}

/// `F(f) = |f|⁻¹ f ⊗ f`, `F(0) = 0`.
pub fn f_map(f: &HVector) -> OperatorMatrix {
    let n = f.norm();
    if n == 0.0 {
        OperatorMatrix::zeros(f.len(), f.len())
    } else {
        tensor_square(f) / n
    }
}

/// Process on the unit sphere selecting the Cholesky factor `Γ_Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitProcess {
    Constant(Vec<f64>),
    /// `Z = Y / |Y|`; at `Y = 0` the first basis vector is used.
    NormalizedY,
}

impl UnitProcess {
    pub fn constant(gamma: HVector) -> Result<Self> {
        check_unit(&gamma)?;
        Ok(Self::Constant(gamma.as_slice().to_vec()))
    }

    /// `Z` given the current driver state.
    pub fn direction(&self, y: &HVector) -> HVector {
        match self {
            Self::Constant(g) => HVector::from_column_slice(g),
            Self::NormalizedY => {
                let n = y.norm();
                if n == 0.0 {
                    basis(y.len(), 0)
                } else {
                    y / n
                }
            }
        }
    }

    pub fn gamma(&self) -> Option<HVector> {
        match self {
            Self::Constant(g) => Some(HVector::from_column_slice(g)),
            Self::NormalizedY => None,
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            Self::Constant(g) => Some(g.len()),
            Self::NormalizedY => None,
        }
    }
}

fn check_unit(z: &HVector) -> Result<()> {
    let n = z.norm();
    if (n - 1.0).abs() > UNIT_TOL {
        return Err(Error::Precondition(format!("unit process must have |Z| = 1, got {n}")));
    }
    Ok(())
}

/// `Γ_Z = Z ⊗ Y`, the operator `h ↦ ⟨Z, h⟩ Y`.
pub fn gamma_factor(z: &HVector, y: &HVector) -> Result<OperatorMatrix> {
    check_dim("gamma_factor", y.len(), z.len())?;
    check_unit(z)?;
    Ok(y * z.transpose())
}

/// `Φ(Y) = AY ⊗ Y + Y ⊗ AY + η Q_W η*`.
pub fn drift_phi(spec: &OuSpec, y: &HVector) -> OperatorMatrix {
    let ay = spec.generator() * y;
    &ay * y.transpose() + y * ay.transpose() + spec.diffusion_cov()
}

/// `A V A* + V − (A − Id) V (A* − Id) + η Q_W η*`.
pub fn drift_operator_form(spec: &OuSpec, v: &OperatorMatrix) -> OperatorMatrix {
    let a = spec.generator();
    let n = a.nrows();
    let shifted = a - OperatorMatrix::identity(n, n);
    a * v * a.transpose() + v - &shifted * v * shifted.transpose() + spec.diffusion_cov()
}

/// `A V + V Aᵀ + η Q_W ηᵀ`, the matrix form of the drift.
pub fn drift_matrix_form(spec: &OuSpec, v: &OperatorMatrix) -> OperatorMatrix {
    let a = spec.generator();
    a * v + v * a.transpose() + spec.diffusion_cov()
}

/// `Ψ(Y)(h) = ηh ⊗ Y + Y ⊗ ηh` for a raw Wiener increment `h`.
pub fn diffusion_psi(spec: &OuSpec, y: &HVector, h: &HVector) -> OperatorMatrix {
    let eh = spec.eta() * h;
    &eh * y.transpose() + y * eh.transpose()
}

/// One Euler step of the coupled `(Y, V)` system.
///
/// `dw` is the already scaled increment `η Q_W^{1/2} ξ √dt`, shared by both updates:
/// `V' = V + Φ(Y) dt + dw ⊗ Y + Y ⊗ dw` and `Y' = Y + A Y dt + dw`.
pub fn tensor_sde_step(
    spec: &OuSpec,
    y: &HVector,
    v: &OperatorMatrix,
    dw: &HVector,
    dt: f64,
) -> (HVector, OperatorMatrix) {
    let v_next = v + drift_phi(spec, y) * dt + dw * y.transpose() + y * dw.transpose();
    let y_next = y + spec.generator() * y * dt + dw;
    (y_next, v_next)
}

/// Remainders of the first- and second-order Fréchet expansions of `v(y) = y ⊗ y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrechetErrors {
    /// `‖v(y+h) − v(y) − Dv(y)h‖`, equal to `|h|²`.
    pub err1: f64,
    /// `max_ξ ‖Dv(y+h)ξ − Dv(y)ξ − D²v(y)(h)(ξ)‖`, equal to 0.
    pub err2: f64,
}

fn dv(y: &HVector, xi: &HVector) -> OperatorMatrix {
    y * xi.transpose() + xi * y.transpose()
}

pub fn frechet_check(y: &HVector, h: &HVector, probes: &[HVector]) -> FrechetErrors {
    let yh = y + h;
    let err1 = (tensor_square(&yh) - tensor_square(y) - dv(y, h)).norm();
    let err2 = probes
        .iter()
        .map(|xi| (dv(&yh, xi) - dv(y, xi) - dv(h, xi)).norm())
        .fold(0.0, f64::max);
    FrechetErrors { err1, err2 }
}

/// State of the coupled `(Y, V)` Euler scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorState {
    pub y: HVector,
    pub v: OperatorMatrix,
}

fn tensor_path_with<F: FnMut(&TensorState)>(spec: &OuSpec, grid: &TimeGrid, seed: u64, path: u64, mut visit: F) -> TensorState {
    let dt = grid.dt();
    let mut euler = EulerY::new(spec, dt, seed, path);
    let mut state = TensorState {
        y: spec.y0().clone(),
        v: tensor_square(spec.y0()),
    };
    visit(&state);
    for _ in 0..grid.steps() {
        let dw = euler.draw_increment();
        let (y, v) = tensor_sde_step(spec, &state.y, &state.v, &dw, dt);
        euler.advance(&dw);
        state = TensorState { y, v };
        visit(&state);
    }
    state
}

/// One path of the coupled scheme, starting from `V(0) = Y0 ⊗ Y0`.
pub fn simulate_tensor_path(spec: &OuSpec, grid: &TimeGrid, seed: u64, path: u64) -> Vec<TensorState> {
    let mut out = Vec::with_capacity(grid.steps() + 1);
    tensor_path_with(spec, grid, seed, path, |s| out.push(s.clone()));
    out
}

pub fn simulate_tensor_paths(spec: &OuSpec, grid: &TimeGrid, count: usize, seed: u64) -> PathEnsemble<TensorState> {
    PathEnsemble {
        grid: *grid,
        seed,
        paths: par_map(count, |p| simulate_tensor_path(spec, grid, seed, p as u64)),
    }
}

/// `‖V_euler(T) − Y_euler(T)^⊗2‖` on one path.
pub fn tensor_consistency_error(spec: &OuSpec, grid: &TimeGrid, seed: u64, path: u64) -> f64 {
    let end = tensor_path_with(spec, grid, seed, path, |_| {});
    (end.v - tensor_square(&end.y)).norm()
}

/// Path-averaged consistency error over `count` paths.
pub fn mean_consistency_error(spec: &OuSpec, grid: &TimeGrid, count: usize, seed: u64) -> f64 {
    let errs = par_map(count, |p| tensor_consistency_error(spec, grid, seed, p as u64));
    errs.iter().sum::<f64>() / count as f64
}
