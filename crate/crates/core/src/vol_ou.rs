//! The volatility-modulated process `dX = C X dt + Γ_Z(t) dB`, `Γ_Z = Z ⊗ Y`.
//!
//! `B` has covariance `Q_B` and is independent of the driver noise `W`.
//! Conditionally on the driver path, `X(t)` is Gaussian with mean `S(t) X0`
//! and covariance `∫_0^t |Q_B^{1/2} Z(s)|² S(t−s) V(s) S*(t−s) ds`.

use num_complex::Complex64;

use crate::error::{check_dim, Error, Result};
use crate::mc::{par_map, ComplexEstimate};
use crate::operator::{symmetrize, Covariance, HVector, OperatorMatrix};
use crate::ou::{cov_y_flow, even_intervals, semigroup, simpson_weights, EulerY, OuSpec, PathEnsemble, TimeGrid};
use crate::rng::{Channel, NoiseStream};
use crate::variance::{gamma_factor, UnitProcess};

/// Inner Simpson intervals per outer step when building `Q_{Y(s)}` along the flow.
const FLOW_QUAD_STEPS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct XSpec {
    generator: OperatorMatrix,
    noise_cov: Covariance,
    x0: HVector,
    unit: UnitProcess,
    ou: OuSpec,
}

impl XSpec {
    pub fn new(
        generator: OperatorMatrix,
        noise_cov: Covariance,
        x0: HVector,
        unit: UnitProcess,
        ou: OuSpec,
    ) -> Result<Self> {
        let n = ou.dim();
        check_dim("C rows", n, generator.nrows())?;
        check_dim("C cols", n, generator.ncols())?;
        check_dim("Q_B", n, noise_cov.dim())?;
        check_dim("X0", n, x0.len())?;
        if let Some(gamma) = unit.gamma() {
            check_dim("gamma", n, gamma.len())?;
            // re-validates |gamma| = 1
            UnitProcess::constant(gamma)?;
        }
        Ok(Self {
            generator,
            noise_cov,
            x0,
            unit,
            ou,
        })
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    pub fn generator(&self) -> &OperatorMatrix {
        &self.generator
    }

    pub fn noise_cov(&self) -> &Covariance {
        &self.noise_cov
    }

    pub fn x0(&self) -> &HVector {
        &self.x0
    }

    pub fn unit(&self) -> &UnitProcess {
        &self.unit
    }

    pub fn ou(&self) -> &OuSpec {
        &self.ou
    }

    /// `|Q_B^{1/2} Z|²` for the unit direction selected at driver state `y`.
    pub fn noise_weight(&self, y: &HVector) -> f64 {
        self.noise_cov.quad_form(&self.unit.direction(y))
    }

    /// `Γ_Z(Y) Q_B^{1/2}`.
    pub fn volatility(&self, y: &HVector) -> Result<OperatorMatrix> {
        Ok(gamma_factor(&self.unit.direction(y), y)? * self.noise_cov.sqrt())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct XState {
    pub y: HVector,
    pub x: HVector,
}

fn x_path_with<F: FnMut(&HVector, &HVector)>(spec: &XSpec, grid: &TimeGrid, seed: u64, path: u64, mut visit: F) -> XState {
    let dt = grid.dt();
    let sqrt_dt = dt.sqrt();
    let n = spec.dim();
    let mut euler = EulerY::new(spec.ou(), dt, seed, path);
    let mut b_noise = NoiseStream::new(seed, path, Channel::B);
    let mut xi = HVector::zeros(n);
    let mut x = spec.x0().clone();
    visit(euler.state(), &x);
    for _ in 0..grid.steps() {
        b_noise.fill_normal(&mut xi);
        let y = euler.state();
        // Γ_Z(Y) Q_B^{1/2} ξ = ⟨Z, Q_B^{1/2} ξ⟩ Y
        let scale = spec.unit.direction(y).dot(&(spec.noise_cov.sqrt() * &xi)) * sqrt_dt;
        let drift = spec.generator() * &x * dt;
        x += drift + y * scale;
        euler.step();
        visit(euler.state(), &x);
    }
    XState {
        y: euler.state().clone(),
        x,
    }
}

/// One Euler path of the coupled `(Y, X)` system.
pub fn simulate_x_path(spec: &XSpec, grid: &TimeGrid, seed: u64, path: u64) -> Vec<XState> {
    let mut out = Vec::with_capacity(grid.steps() + 1);
    x_path_with(spec, grid, seed, path, |y, x| {
        out.push(XState {
            y: y.clone(),
            x: x.clone(),
        })
    });
    out
}

/// Terminal state of one coupled path, without storing the path.
pub fn terminal_x(spec: &XSpec, grid: &TimeGrid, seed: u64, path: u64) -> XState {
    x_path_with(spec, grid, seed, path, |_, _| {})
}

/// Euler ensemble `X_{k+1} = X_k + C X_k dt + Γ_{Z_k}(Y_k) Q_B^{1/2} ξ^B_k √dt`, `Y` co-simulated.
pub fn simulate_x_paths(spec: &XSpec, grid: &TimeGrid, count: usize, seed: u64) -> PathEnsemble<XState> {
    PathEnsemble {
        grid: *grid,
        seed,
        paths: par_map(count, |p| simulate_x_path(spec, grid, seed, p as u64)),
    }
}

/// Terminal `X` for a fixed driver path, with `B` noise taken from `(seed, path)`.
pub fn terminal_x_given_y(spec: &XSpec, grid: &TimeGrid, y_path: &[HVector], seed: u64, path: u64) -> Result<HVector> {
    check_dim("driver path length", grid.steps() + 1, y_path.len())?;
    let dt = grid.dt();
    let mut b_noise = NoiseStream::new(seed, path, Channel::B);
    let mut xi = HVector::zeros(spec.dim());
    let mut x = spec.x0().clone();
    for y in &y_path[..grid.steps()] {
        b_noise.fill_normal(&mut xi);
        let vol = spec.volatility(y)?;
        let drift = spec.generator() * &x * dt;
        x += drift + vol * &xi * dt.sqrt();
    }
    Ok(x)
}

/// `S(t − t_k)* f` for every grid time `t_k`.
fn adjoint_flow(c: &OperatorMatrix, f: &HVector, dt: f64, steps: usize) -> Result<Vec<HVector>> {
    let step_t = semigroup(c, dt)?.transpose();
    let mut out = vec![f.clone(); steps + 1];
    for k in (0..steps).rev() {
        out[k] = &step_t * &out[k + 1];
    }
    Ok(out)
}

/// Monte Carlo value of the conditional characteristic functional
/// `e^{i⟨S(t)X0, f⟩} E[exp(−½ ∫_0^t |Q_B^{1/2}Z(s)|² ⟨Y(s), S*(t−s) f⟩² ds)]`,
/// with the time integral taken by the trapezoid rule on the simulated driver grid.
pub fn cond_char_x(
    spec: &XSpec,
    t: f64,
    steps: usize,
    f: &HVector,
    mc_paths: usize,
    seed: u64,
) -> Result<ComplexEstimate> {
    check_dim("cond_char_x f", spec.dim(), f.len())?;
    if t == 0.0 {
        let z = Complex64::from_polar(1.0, spec.x0().dot(f));
        return Ok(ComplexEstimate::from_samples(&vec![z; mc_paths.max(1)]));
    }
    let grid = TimeGrid::new(t, steps)?;
    let dt = grid.dt();
    let g = adjoint_flow(spec.generator(), f, dt, steps)?;
    let phase = Complex64::from_polar(1.0, spec.x0().dot(&g[0]));
    let samples = par_map(mc_paths, |p| {
        let mut euler = EulerY::new(spec.ou(), dt, seed, p as u64);
        let mut integral = 0.0;
        for (k, gk) in g.iter().enumerate() {
            let y = euler.state();
            let w = if k == 0 || k == steps { 0.5 } else { 1.0 };
            integral += w * spec.noise_weight(y) * y.dot(gk).powi(2);
            if k < steps {
                euler.step();
            }
        }
        phase * (-0.5 * integral * dt).exp()
    });
    Ok(ComplexEstimate::from_samples(&samples))
}

/// Empirical `E[exp(i⟨X(t), f⟩)]` over simulated `X` paths.
pub fn empirical_char_x(
    spec: &XSpec,
    grid: &TimeGrid,
    f: &HVector,
    count: usize,
    seed: u64,
) -> Result<ComplexEstimate> {
    check_dim("empirical_char_x f", spec.dim(), f.len())?;
    let samples = par_map(count, |p| {
        let end = terminal_x(spec, grid, seed, p as u64);
        Complex64::from_polar(1.0, end.x.dot(f))
    });
    Ok(ComplexEstimate::from_samples(&samples))
}

/// Closed-form `Q_{X(t)}` for a constant unit process `Z ≡ γ`:
/// `∫_0^t S(t−s) |Q_B^{1/2}γ|² [(U(s)Y0)^⊗2 + Q_{Y(s)}] S*(t−s) ds`,
/// outer integral by composite Simpson.
pub fn cov_x(spec: &XSpec, t: f64, quad_steps: usize) -> Result<Covariance> {
    let gamma = spec.unit().gamma().ok_or_else(|| {
        Error::Unsupported("closed-form Q_X(t) needs a constant unit process; use Monte Carlo".into())
    })?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain {
            name: "t",
            value: t,
            range: "[0, inf)".into(),
        });
    }
    let n = spec.dim();
    if t == 0.0 {
        return Ok(Covariance::zeros(n));
    }
    let weight = spec.noise_cov().quad_form(&gamma);
    let intervals = even_intervals(quad_steps);
    let h = t / intervals as f64;
    let q_y = cov_y_flow(spec.ou(), h, intervals, FLOW_QUAD_STEPS)?;
    let u_h = semigroup(spec.ou().generator(), h)?;
    let s_h = semigroup(spec.generator(), h)?;
    let mut s_pow = vec![OperatorMatrix::identity(n, n)];
    for k in 0..intervals {
        let next = &s_h * &s_pow[k];
        s_pow.push(next);
    }
    let mut mean = spec.ou().y0().clone();
    let mut acc = OperatorMatrix::zeros(n, n);
    for (k, w) in simpson_weights(intervals).into_iter().enumerate() {
        if k > 0 {
            mean = &u_h * &mean;
        }
        let s = &s_pow[intervals - k];
        let inner = &mean * mean.transpose() + &q_y[k];
        acc += (s * inner * s.transpose()) * w;
    }
    Covariance::named(symmetrize(&(acc * (weight * h / 3.0))), "Q_X(t)")
}
