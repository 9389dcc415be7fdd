//! The Gaussian Ornstein-Uhlenbeck driver `dY = A Y dt + η dW`, `Cov(W(1)) = Q_W`.
//!
//! Covers the semigroup `U(t) = exp(tA)`, the covariance operator
//! `Q_{Y(t)} = ∫_0^t U(s) η Q_W η* U*(s) ds`, its stationary limit, and two
//! samplers: exact draws from the Gaussian marginal and Euler-Maruyama paths.

use nalgebra::Complex;

use crate::error::{check_dim, Error, Result};
use crate::mc::par_map;
use crate::operator::{symmetrize, Covariance, HVector, OperatorMatrix};
use crate::rng::{Channel, NoiseStream};

/// Quadrature nodes per unit time used when the caller does not choose.
pub const QUAD_STEPS_PER_UNIT_TIME: f64 = 200.0;

pub fn default_quad_steps(t: f64) -> usize {
    ((QUAD_STEPS_PER_UNIT_TIME * t).ceil() as usize).max(2)
}

/// Parameters of the `Y` dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct OuSpec {
    generator: OperatorMatrix,
    eta: OperatorMatrix,
    noise_cov: Covariance,
    y0: HVector,
    diffusion: OperatorMatrix,
}

impl OuSpec {
    pub fn new(
        generator: OperatorMatrix,
        eta: OperatorMatrix,
        noise_cov: Covariance,
        y0: HVector,
    ) -> Result<Self> {
        let n = y0.len();
        if n == 0 {
            return Err(Error::Precondition("truncation rank must be at least 1".into()));
        }
        check_dim("A rows", n, generator.nrows())?;
        check_dim("A cols", n, generator.ncols())?;
        check_dim("eta rows", n, eta.nrows())?;
        check_dim("eta cols", n, eta.ncols())?;
        check_dim("Q_W", n, noise_cov.dim())?;
        let diffusion = &eta * noise_cov.sqrt();
        Ok(Self {
            generator,
            eta,
            noise_cov,
            y0,
            diffusion,
        })
    }

    /// One-dimensional model `dY = a Y dt + σ dW` with `Var(W(1)) = q`.
    pub fn scalar(a: f64, sigma: f64, q: f64, y0: f64) -> Result<Self> {
        Self::new(
            OperatorMatrix::from_element(1, 1, a),
            OperatorMatrix::from_element(1, 1, sigma),
            Covariance::new(OperatorMatrix::from_element(1, 1, q))?,
            HVector::from_element(1, y0),
        )
    }

    pub fn dim(&self) -> usize {
        self.y0.len()
    }

    pub fn generator(&self) -> &OperatorMatrix {
        &self.generator
    }

    pub fn eta(&self) -> &OperatorMatrix {
        &self.eta
    }

    pub fn noise_cov(&self) -> &Covariance {
        &self.noise_cov
    }

    pub fn y0(&self) -> &HVector {
        &self.y0
    }

    /// `η Q_W^{1/2}`, the map from standard normal coordinates to increments of `ηW`.
    pub fn diffusion(&self) -> &OperatorMatrix {
        &self.diffusion
    }

    /// `η Q_W η*`.
    pub fn diffusion_cov(&self) -> OperatorMatrix {
        &self.diffusion * self.diffusion.transpose()
    }

    pub fn with_y0(&self, y0: HVector) -> Result<Self> {
        check_dim("Y0", self.dim(), y0.len())?;
        Ok(Self {
            y0,
            ..self.clone()
        })
    }
}

/// Uniform time grid on `[0, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_end: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, steps: usize) -> Result<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::Domain {
                name: "t_end",
                value: t_end,
                range: "(0, inf)".into(),
            });
        }
        if steps == 0 {
            return Err(Error::Domain {
                name: "steps",
                value: 0.0,
                range: "[1, inf)".into(),
            });
        }
        Ok(Self { t_end, steps })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.t_end
        } else {
            k as f64 * self.dt()
        }
    }

    pub fn refined(&self, factor: usize) -> Self {
        Self {
            t_end: self.t_end,
            steps: self.steps * factor,
        }
    }
}

/// Simulated paths of some state type `S`, each with `steps + 1` states.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble<S> {
    pub grid: TimeGrid,
    pub seed: u64,
    pub paths: Vec<Vec<S>>,
}

impl<S> PathEnsemble<S> {
    pub fn path_count(&self) -> usize {
        self.paths.len()
    }

    pub fn terminal(&self) -> impl Iterator<Item = &S> {
        self.paths.iter().map(|p| p.last().expect("paths are non-empty"))
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "t",
            value: t,
            range: "[0, inf)".into(),
        })
    }
}

/// `U(t) = exp(tA)` by scaling and squaring with a Padé approximant.
pub fn semigroup(a: &OperatorMatrix, t: f64) -> Result<OperatorMatrix> {
    check_time(t)?;
    check_dim("semigroup", a.nrows(), a.ncols())?;
    if t == 0.0 {
        return Ok(OperatorMatrix::identity(a.nrows(), a.ncols()));
    }
    Ok((a * t).exp())
}

/// Composite Simpson weights (without the `h/3` factor) for `n` intervals, `n` even.
pub(crate) fn simpson_weights(n: usize) -> Vec<f64> {
    debug_assert!(n >= 2 && n % 2 == 0);
    (0..=n)
        .map(|k| {
            if k == 0 || k == n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            }
        })
        .collect()
}

pub(crate) fn even_intervals(steps: usize) -> usize {
    let n = steps.max(2);
    n + n % 2
}

/// `Q_{Y(t)}` by composite Simpson quadrature over `quad_steps` intervals
/// (rounded up to an even count).
pub fn cov_y(spec: &OuSpec, t: f64, quad_steps: usize) -> Result<Covariance> {
    check_time(t)?;
    let n = spec.dim();
    if t == 0.0 {
        return Ok(Covariance::zeros(n));
    }
    if quad_steps == 0 {
        return Err(Error::Domain {
            name: "quad_steps",
            value: 0.0,
            range: "[1, inf)".into(),
        });
    }
    let intervals = even_intervals(quad_steps);
    let h = t / intervals as f64;
    let step = semigroup(spec.generator(), h)?;
    let m = spec.diffusion_cov();
    let mut u = OperatorMatrix::identity(n, n);
    let mut acc = OperatorMatrix::zeros(n, n);
    for (k, w) in simpson_weights(intervals).into_iter().enumerate() {
        if k > 0 {
            u = &step * &u;
        }
        acc += (&u * &m * u.transpose()) * w;
    }
    Covariance::named(symmetrize(&(acc * (h / 3.0))), "Q_Y(t)")
}

/// `Q_{Y(k·dt)}` for `k = 0..=steps`, from the flow identity
/// `Q_{Y(s+dt)} = U(dt) Q_{Y(s)} U(dt)* + Q_{Y(dt)}`.
pub fn cov_y_flow(spec: &OuSpec, dt: f64, steps: usize, quad_steps: usize) -> Result<Vec<OperatorMatrix>> {
    let q_dt = cov_y(spec, dt, quad_steps)?.into_matrix();
    let u = semigroup(spec.generator(), dt)?;
    let n = spec.dim();
    let mut out = Vec::with_capacity(steps + 1);
    let mut q = OperatorMatrix::zeros(n, n);
    out.push(q.clone());
    for _ in 0..steps {
        q = symmetrize(&(&u * &q * u.transpose() + &q_dt));
        out.push(q.clone());
    }
    Ok(out)
}

/// Largest real part of the spectrum of `a`.
pub fn spectral_abscissa(a: &OperatorMatrix) -> f64 {
    let eig: nalgebra::DVector<Complex<f64>> = a.clone().complex_eigenvalues();
    eig.iter().fold(f64::NEG_INFINITY, |m, z| m.max(z.re))
}

/// `∫_0^h e^{sA} M e^{sAᵀ} ds` from the exponential of the block matrix
/// `[[-A, M], [0, Aᵀ]] h`.
fn van_loan(a: &OperatorMatrix, m: &OperatorMatrix, h: f64) -> OperatorMatrix {
    let n = a.nrows();
    let mut block = OperatorMatrix::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(&(-a * h));
    block.view_mut((0, n), (n, n)).copy_from(&(m * h));
    block.view_mut((n, n), (n, n)).copy_from(&(a.transpose() * h));
    let f = block.exp();
    let f12 = f.view((0, n), (n, n)).into_owned();
    let f22 = f.view((n, n), (n, n)).into_owned();
    f22.transpose() * f12
}

/// Smith doubling on the exact discrete-time data `(U(h), Q(h))`.
fn lyapunov_doubling(a: &OperatorMatrix, m: &OperatorMatrix) -> OperatorMatrix {
    let norm = a.abs().row_sum().max();
    let h = if norm > 0.0 { 0.5 / norm } else { 1.0 };
    let mut q = van_loan(a, m, h);
    let mut u = (a * h).exp();
    for _ in 0..128 {
        if u.norm() < 1e-10 {
            break;
        }
        q += &u * &q * u.transpose();
        u = &u * &u;
    }
    q
}

/// Solves `A Q + Q Aᵀ + M = 0` for stable `A`.
pub fn solve_lyapunov(a: &OperatorMatrix, m: &OperatorMatrix) -> Result<OperatorMatrix> {
    check_dim("lyapunov A", a.nrows(), a.ncols())?;
    check_dim("lyapunov M", a.nrows(), m.nrows())?;
    check_dim("lyapunov M", a.ncols(), m.ncols())?;
    let abscissa = spectral_abscissa(a);
    if !(abscissa < 0.0) {
        return Err(Error::Unstable {
            max_real_part: abscissa,
        });
    }
    let mut q = lyapunov_doubling(a, m);
    // one step of residual correction
    let r = lyapunov_residual(a, &q, m);
    q += lyapunov_doubling(a, &r);
    Ok(symmetrize(&q))
}

/// `A Q + Q Aᵀ + M`.
pub fn lyapunov_residual(a: &OperatorMatrix, q: &OperatorMatrix, m: &OperatorMatrix) -> OperatorMatrix {
    a * q + q * a.transpose() + m
}

/// Covariance of the invariant law, `Q_Y = ∫_0^∞ U(s) η Q_W η* U*(s) ds`.
pub fn stationary_cov_y(spec: &OuSpec) -> Result<Covariance> {
    let q = solve_lyapunov(spec.generator(), &spec.diffusion_cov())?;
    Covariance::named(q, "stationary Q_Y")
}

/// Exact draws of `Y(t) ~ N(U(t) Y0, Q_{Y(t)})`.
pub fn sample_y_exact(
    spec: &OuSpec,
    t: f64,
    count: usize,
    seed: u64,
    quad_steps: usize,
) -> Result<Vec<HVector>> {
    let mean = semigroup(spec.generator(), t)? * spec.y0();
    let cov = cov_y(spec, t, quad_steps)?;
    let root = cov.sqrt();
    let n = spec.dim();
    Ok(par_map(count, |i| {
        let mut s = NoiseStream::new(seed, i as u64, Channel::Exact);
        &mean + root * s.normal_vector(n)
    }))
}

/// Exact one-step transition `Y(t+dt) = U(dt) Y(t) + N(0, Q_{Y(dt)})`.
#[derive(Debug, Clone)]
pub struct ExactTransition {
    step: OperatorMatrix,
    noise: Covariance,
}

impl ExactTransition {
    pub fn new(spec: &OuSpec, dt: f64, quad_steps: usize) -> Result<Self> {
        Ok(Self {
            step: semigroup(spec.generator(), dt)?,
            noise: cov_y(spec, dt, quad_steps)?,
        })
    }

    /// Path of `steps + 1` states from `y0`, drawing from the exact channel of `(seed, path)`.
    pub fn path(&self, y0: &HVector, steps: usize, seed: u64, path: u64) -> Vec<HVector> {
        let mut s = NoiseStream::new(seed, path, Channel::Exact);
        let mut out = Vec::with_capacity(steps + 1);
        out.push(y0.clone());
        for k in 0..steps {
            let next = &self.step * &out[k] + self.noise.sqrt() * s.normal_vector(y0.len());
            out.push(next);
        }
        out
    }
}

/// Euler-Maruyama state of `Y` on a fixed step, drawing from the W channel of one path.
#[derive(Debug, Clone)]
pub struct EulerY<'a> {
    spec: &'a OuSpec,
    dt: f64,
    sqrt_dt: f64,
    y: HVector,
    xi: HVector,
    noise: NoiseStream,
}

impl<'a> EulerY<'a> {
    pub fn new(spec: &'a OuSpec, dt: f64, seed: u64, path: u64) -> Self {
        Self {
            spec,
            dt,
            sqrt_dt: dt.sqrt(),
            y: spec.y0().clone(),
            xi: HVector::zeros(spec.dim()),
            noise: NoiseStream::new(seed, path, Channel::W),
        }
    }

    pub fn state(&self) -> &HVector {
        &self.y
    }

    /// Next increment `η Q_W^{1/2} ξ √dt`.
    pub fn draw_increment(&mut self) -> HVector {
        self.noise.fill_normal(&mut self.xi);
        self.spec.diffusion() * &self.xi * self.sqrt_dt
    }

    /// Standard normal vector behind the last increment.
    pub fn last_normal(&self) -> &HVector {
        &self.xi
    }

    /// `Y ← Y + A Y dt + dW`.
    pub fn advance(&mut self, dw: &HVector) {
        let drift = self.spec.generator() * &self.y * self.dt;
        self.y += drift + dw;
    }

    pub fn step(&mut self) -> &HVector {
        let dw = self.draw_increment();
        self.advance(&dw);
        &self.y
    }
}

/// One Euler-Maruyama path of `Y` (`steps + 1` states).
pub fn euler_y_path(spec: &OuSpec, grid: &TimeGrid, seed: u64, path: u64) -> Vec<HVector> {
    let mut euler = EulerY::new(spec, grid.dt(), seed, path);
    let mut out = Vec::with_capacity(grid.steps() + 1);
    out.push(euler.state().clone());
    for _ in 0..grid.steps() {
        out.push(euler.step().clone());
    }
    out
}

/// Euler-Maruyama ensemble `Y_{k+1} = Y_k + A Y_k dt + η Q_W^{1/2} ξ_k √dt`.
pub fn simulate_y_paths(spec: &OuSpec, grid: &TimeGrid, count: usize, seed: u64) -> PathEnsemble<HVector> {
    PathEnsemble {
        grid: *grid,
        seed,
        paths: par_map(count, |p| euler_y_path(spec, grid, seed, p as u64)),
    }
}
