//! Forward curves in the Filipovic space `H_w`, `|f|_w² = f(0)² + ∫ w(x) |f'(x)|² dx`
//! with `w(x) = e^{αx}`, truncated at a maximal maturity `X_max`.
//!
//! Curves are stored as `f(0)` plus samples of `f'` on a maturity grid; beyond `X_max`
//! the derivative is zero (flat extrapolation). [`KernelFrame`] maps curves into the
//! orthonormal coordinates used by the simulation core.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::mc::{par_map, Estimate};
use crate::operator::{HVector, OperatorMatrix};
use crate::ou::{cov_y_flow, even_intervals, semigroup, simpson_weights, ExactTransition, TimeGrid};
use crate::vol_ou::XSpec;

pub const DEFAULT_X_MAX: f64 = 5.0;
pub const DEFAULT_GRID_POINTS: usize = 201;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilipovicSpace {
    alpha: f64,
    x_grid: Vec<f64>,
    quad_weights: Vec<f64>,
}

impl FilipovicSpace {
    /// Uniform grid of `points` maturities on `[0, x_max]`.
    pub fn new(alpha: f64, x_max: f64, points: usize) -> Result<Self> {
        if !(x_max > 0.0 && x_max.is_finite()) {
            return Err(Error::Domain {
                name: "x_max",
                value: x_max,
                range: "(0, inf)".into(),
            });
        }
        if points < 2 {
            return Err(Error::Precondition("maturity grid needs at least two points".into()));
        }
        let h = x_max / (points - 1) as f64;
        let grid = (0..points).map(|i| if i + 1 == points { x_max } else { i as f64 * h }).collect();
        Self::with_grid(alpha, grid)
    }

    pub fn with_default_grid(alpha: f64) -> Result<Self> {
        Self::new(alpha, DEFAULT_X_MAX, DEFAULT_GRID_POINTS)
    }

    pub fn with_grid(alpha: f64, x_grid: Vec<f64>) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Domain {
                name: "alpha",
                value: alpha,
                range: "(0, inf)".into(),
            });
        }
        if x_grid.len() < 2 || x_grid[0] != 0.0 || x_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition(
                "maturity grid must start at 0 and be strictly increasing".into(),
            ));
        }
        let n = x_grid.len();
        let quad_weights = (0..n)
            .map(|i| {
                let left = if i > 0 { x_grid[i] - x_grid[i - 1] } else { 0.0 };
                let right = if i + 1 < n { x_grid[i + 1] - x_grid[i] } else { 0.0 };
                0.5 * (left + right)
            })
            .collect();
        Ok(Self {
            alpha,
            x_grid,
            quad_weights,
        })
    }

    /// Same maturity range with `factor` times as many cells.
    pub fn refined(&self, factor: usize) -> Self {
        let cells = (self.x_grid.len() - 1) * factor.max(1);
        Self::new(self.alpha, self.x_max(), cells + 1).expect("refining a valid grid")
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn x_grid(&self) -> &[f64] {
        &self.x_grid
    }

    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    pub fn x_max(&self) -> f64 {
        self.x_grid[self.x_grid.len() - 1]
    }

    pub fn weight(&self, x: f64) -> f64 {
        (self.alpha * x).exp()
    }

    fn len(&self) -> usize {
        self.x_grid.len()
    }

    /// Cell `j` with `x_j ≤ x ≤ x_{j+1}` and the fraction `θ` of the cell below `x`.
    fn locate(&self, x: f64) -> (usize, f64) {
        let g = &self.x_grid;
        let j = g.partition_point(|&v| v <= x).clamp(1, g.len() - 1) - 1;
        (j, ((x - g[j]) / (g[j + 1] - g[j])).clamp(0.0, 1.0))
    }

    fn check_range(&self, name: &'static str, x: f64) -> Result<()> {
        if x >= 0.0 && x <= self.x_max() {
            Ok(())
        } else {
            Err(Error::Domain {
                name,
                value: x,
                range: format!("[0, {}]", self.x_max()),
            })
        }
    }
}

/// A curve `f` given by `f(0)` and samples of `f'` on the space's maturity grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveElement {
    pub value0: f64,
    pub deriv: Vec<f64>,
}

impl CurveElement {
    pub fn constant(space: &FilipovicSpace, c: f64) -> Self {
        Self {
            value0: c,
            deriv: vec![0.0; space.len()],
        }
    }

    /// Samples `f'` on the grid.
    pub fn from_fn(space: &FilipovicSpace, value0: f64, deriv: impl Fn(f64) -> f64) -> Self {
        Self {
            value0,
            deriv: space.x_grid.iter().map(|&x| deriv(x)).collect(),
        }
    }

    /// Linear interpolation of `f'`, zero beyond `X_max`.
    pub fn deriv_at(&self, space: &FilipovicSpace, x: f64) -> f64 {
        if x > space.x_max() {
            return 0.0;
        }
        let (j, theta) = space.locate(x);
        (1.0 - theta) * self.deriv[j] + theta * self.deriv[j + 1]
    }

    /// `f(x) = f(0) + ∫_0^x f'`, integrating the interpolated derivative exactly.
    pub fn eval(&self, space: &FilipovicSpace, x: f64) -> f64 {
        let x = x.clamp(0.0, space.x_max());
        let (j, theta) = space.locate(x);
        let g = &space.x_grid;
        let d = &self.deriv;
        let full: f64 = (0..j).map(|i| 0.5 * (g[i + 1] - g[i]) * (d[i] + d[i + 1])).sum();
        let h = g[j + 1] - g[j];
        self.value0 + full + h * (d[j] * (theta - 0.5 * theta * theta) + d[j + 1] * 0.5 * theta * theta)
    }

    pub fn scaled_add(&mut self, a: f64, other: &CurveElement) {
        self.value0 += a * other.value0;
        for (d, o) in self.deriv.iter_mut().zip(&other.deriv) {
            *d += a * o;
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.value0 *= a;
        self.deriv.iter_mut().for_each(|d| *d *= a);
    }
}

/// `⟨f, g⟩_w = f(0) g(0) + Σ q_i w(x_i) f'_i g'_i`.
pub fn inner_w(space: &FilipovicSpace, f: &CurveElement, g: &CurveElement) -> Result<f64> {
    check_dim("curve grid", space.len(), f.deriv.len())?;
    check_dim("curve grid", space.len(), g.deriv.len())?;
    let tail: f64 = space
        .x_grid
        .iter()
        .zip(&space.quad_weights)
        .zip(f.deriv.iter().zip(&g.deriv))
        .map(|((&x, &q), (a, b))| q * space.weight(x) * a * b)
        .sum();
    Ok(f.value0 * g.value0 + tail)
}

pub fn norm_w(space: &FilipovicSpace, f: &CurveElement) -> Result<f64> {
    Ok(inner_w(space, f, f)?.sqrt())
}

/// Reproducing element `h_x(y) = 1 + (1 − e^{−α(x∧y)})/α`.
///
/// The step `h_x'(y) = e^{−αy} 1{y<x}` is sampled so that the trapezoid rule integrates
/// the linear interpolant of the other factor exactly over `[0, x]`, including the partial cell.
pub fn make_h(space: &FilipovicSpace, x: f64) -> Result<CurveElement> {
    space.check_range("x", x)?;
    let g = &space.x_grid;
    let q = &space.quad_weights;
    let (j, theta) = space.locate(x);
    let h = g[j + 1] - g[j];
    let left = if j > 0 { 0.5 * (g[j] - g[j - 1]) } else { 0.0 };
    let mut share = vec![0.0; g.len()];
    share[..j].fill(1.0);
    share[j] = (left + h * (theta - 0.5 * theta * theta)) / q[j];
    share[j + 1] = h * 0.5 * theta * theta / q[j + 1];
    let deriv = g.iter().zip(&share).map(|(&y, &s)| s / space.weight(y)).collect();
    Ok(CurveElement { value0: 1.0, deriv })
}

/// Analytic `h_x(y)`.
pub fn h_value(space: &FilipovicSpace, x: f64, y: f64) -> f64 {
    1.0 + (1.0 - (-space.alpha * x.min(y)).exp()) / space.alpha
}

/// `S(t) f = f(· + t)`; the derivative is resampled at `x + t` and `f(0)` becomes `f(t)`.
pub fn shift(space: &FilipovicSpace, t: f64, f: &CurveElement) -> Result<CurveElement> {
    if !(t >= 0.0) {
        return Err(Error::Domain {
            name: "t",
            value: t,
            range: "[0, inf)".into(),
        });
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    check_dim("curve grid", space.len(), f.deriv.len())?;
    Ok(CurveElement {
        value0: f.eval(space, t),
        deriv: space.x_grid.iter().map(|&x| f.deriv_at(space, x + t)).collect(),
    })
}

/// Weighted mass `f'(X_max)² ∫_{X_max−t}^{X_max} w` that a shift by `t` discards
/// if the true curve keeps its terminal slope past `X_max`.
pub fn tail_loss(space: &FilipovicSpace, t: f64, f: &CurveElement) -> f64 {
    let x_max = space.x_max();
    let lo = (x_max - t.max(0.0)).max(0.0);
    let slope = f.deriv[f.deriv.len() - 1];
    slope * slope * (space.weight(x_max) - space.weight(lo)) / space.alpha
}

#[derive(Debug, Clone, Copy, Deserialize)]
struct CurvePoint {
    maturity: f64,
    forward_value: f64,
}

/// Builds a curve from `(maturity, forward_value)` quotes.
///
/// First differences sit at the midpoints between quotes and are linearly interpolated back
/// to the grid; the first slope extends to maturity 0 and the derivative is zero past the last quote.
pub fn curve_from_points(space: &FilipovicSpace, points: &[(f64, f64)]) -> Result<CurveElement> {
    if points.len() < 2 {
        return Err(Error::Precondition("a curve needs at least two quotes".into()));
    }
    if points[0].0 < 0.0 || points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Precondition(
            "maturities must be nonnegative and strictly increasing".into(),
        ));
    }
    let mids: Vec<f64> = points.windows(2).map(|w| 0.5 * (w[0].0 + w[1].0)).collect();
    let slopes: Vec<f64> = points.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
    let last = points[points.len() - 1].0;
    let deriv = space
        .x_grid
        .iter()
        .map(|&x| {
            if x > last {
                0.0
            } else if x <= mids[0] {
                slopes[0]
            } else if x >= mids[mids.len() - 1] {
                slopes[slopes.len() - 1]
            } else {
                let k = mids.partition_point(|&m| m <= x) - 1;
                let theta = (x - mids[k]) / (mids[k + 1] - mids[k]);
                (1.0 - theta) * slopes[k] + theta * slopes[k + 1]
            }
        })
        .collect();
    Ok(CurveElement {
        value0: points[0].1 - slopes[0] * points[0].0,
        deriv,
    })
}

/// Reads a CSV with header `maturity,forward_value`.
pub fn curve_from_csv(space: &FilipovicSpace, path: &Path) -> Result<CurveElement> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut points = Vec::new();
    for row in reader.deserialize() {
        let p: CurvePoint = row?;
        points.push((p.maturity, p.forward_value));
    }
    curve_from_points(space, &points)
}

/// Orthonormal frame from Gram–Schmidt applied to `h_{x_1}, …, h_{x_N}`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelFrame {
    space: FilipovicSpace,
    knots: Vec<f64>,
    basis: Vec<CurveElement>,
}

impl KernelFrame {
    pub fn new(space: FilipovicSpace, knots: &[f64]) -> Result<Self> {
        let mut basis: Vec<CurveElement> = Vec::with_capacity(knots.len());
        for &x in knots {
            let mut e = make_h(&space, x)?;
            let before = norm_w(&space, &e)?;
            // two passes of modified Gram–Schmidt keep the frame orthonormal to rounding
            for _ in 0..2 {
                for b in &basis {
                    let c = inner_w(&space, &e, b)?;
                    e.scaled_add(-c, b);
                }
            }
            let norm = norm_w(&space, &e)?;
            if norm <= 1e-10 * before {
                return Err(Error::Precondition(format!(
                    "kernel at maturity {x} is linearly dependent on earlier knots"
                )));
            }
            e.scale(1.0 / norm);
            basis.push(e);
        }
        Ok(Self {
            space,
            knots: knots.to_vec(),
            basis,
        })
    }

    pub fn space(&self) -> &FilipovicSpace {
        &self.space
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn basis(&self) -> &[CurveElement] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// `(⟨f, e_k⟩_w)_k`, the coordinates of the orthogonal projection of `f` onto the frame.
    pub fn coords(&self, f: &CurveElement) -> Result<HVector> {
        let c = self
            .basis
            .iter()
            .map(|e| inner_w(&self.space, f, e))
            .collect::<Result<Vec<_>>>()?;
        Ok(HVector::from_vec(c))
    }

    pub fn element(&self, coords: &HVector) -> Result<CurveElement> {
        check_dim("frame coordinates", self.dim(), coords.len())?;
        let mut out = CurveElement::constant(&self.space, 0.0);
        for (c, e) in coords.iter().zip(&self.basis) {
            out.scaled_add(*c, e);
        }
        Ok(out)
    }

    /// Coordinates of the evaluation functional `δ_x = ⟨·, h_x⟩_w`.
    pub fn kernel_coords(&self, x: f64) -> Result<HVector> {
        self.coords(&make_h(&self.space, x)?)
    }

    /// `S(t)` compressed to the frame: entries `⟨S(t) e_l, e_k⟩_w`.
    pub fn shift_matrix(&self, t: f64) -> Result<OperatorMatrix> {
        let n = self.dim();
        let mut m = OperatorMatrix::zeros(n, n);
        for (l, e) in self.basis.iter().enumerate() {
            m.set_column(l, &self.coords(&shift(&self.space, t, e)?)?);
        }
        Ok(m)
    }

    /// Difference quotient `(S(δ) − Id)/δ` with `δ` the finest grid spacing,
    /// usable as the generator `A` or `C` of a model on `H_w`.
    pub fn shift_generator(&self) -> Result<OperatorMatrix> {
        let delta = self
            .space
            .x_grid
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        let n = self.dim();
        Ok((self.shift_matrix(delta)? - OperatorMatrix::identity(n, n)) / delta)
    }
}

/// Forward price `f(t, x) = ⟨X(t), h_x⟩_w` from frame coordinates.
pub fn forward_price(frame: &KernelFrame, state: &HVector, x: f64) -> Result<f64> {
    check_dim("forward state", frame.dim(), state.len())?;
    Ok(state.dot(&frame.kernel_coords(x)?))
}

/// Monte Carlo controls for [`forward_cov`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForwardMc {
    pub steps: usize,
    pub paths: usize,
    pub seed: u64,
    pub quad_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForwardCov {
    pub mc: Estimate,
    /// Present when the unit process is a constant `γ`.
    pub closed_form: Option<f64>,
}

/// `Cov(f(t,x), f(t,y)) = E ∫_0^t |Q_B^{1/2} Z(s)|_w² Y(s, x+t−s) Y(s, y+t−s) ds`, `Y(s,z) = ⟨Y(s), h_z⟩_w`.
///
/// The Monte Carlo estimate samples exact driver transitions on the time grid and integrates
/// by the trapezoid rule; the closed form (constant `γ`) uses Simpson on `quad_steps` intervals.
pub fn forward_cov(spec: &XSpec, frame: &KernelFrame, t: f64, x: f64, y: f64, mc: &ForwardMc) -> Result<ForwardCov> {
    check_dim("frame dimension", frame.dim(), spec.dim())?;
    let space = frame.space();
    space.check_range("x + t", x + t)?;
    space.check_range("y + t", y + t)?;
    space.check_range("x", x)?;
    space.check_range("y", y)?;
    let gamma = spec.unit().gamma();
    if t == 0.0 {
        return Ok(ForwardCov {
            mc: Estimate::from_samples(&vec![0.0; mc.paths.max(1)]),
            closed_form: gamma.map(|_| 0.0),
        });
    }
    let grid = TimeGrid::new(t, mc.steps)?;
    let dt = grid.dt();
    let kernels = |s: f64| -> Result<(HVector, HVector)> {
        Ok((frame.kernel_coords(x + t - s)?, frame.kernel_coords(y + t - s)?))
    };
    let nodes = (0..=mc.steps)
        .map(|k| kernels(grid.time(k)))
        .collect::<Result<Vec<_>>>()?;
    let transition = ExactTransition::new(spec.ou(), dt, mc.quad_steps)?;
    let samples = par_map(mc.paths, |p| {
        let ys = transition.path(spec.ou().y0(), mc.steps, mc.seed, p as u64);
        let mut acc = 0.0;
        for (k, (yk, (ha, hb))) in ys.iter().zip(&nodes).enumerate() {
            let w = if k == 0 || k == mc.steps { 0.5 } else { 1.0 };
            acc += w * spec.noise_weight(yk) * yk.dot(ha) * yk.dot(hb);
        }
        acc * dt
    });
    let closed_form = match gamma {
        Some(g) => Some(forward_cov_closed(spec, &g, t, &kernels, mc.quad_steps)?),
        None => None,
    };
    Ok(ForwardCov {
        mc: Estimate::from_samples(&samples),
        closed_form,
    })
}

fn forward_cov_closed(
    spec: &XSpec,
    gamma: &HVector,
    t: f64,
    kernels: &impl Fn(f64) -> Result<(HVector, HVector)>,
    quad_steps: usize,
) -> Result<f64> {
    let ou = spec.ou();
    let intervals = even_intervals(quad_steps);
    let h = t / intervals as f64;
    let q_y = cov_y_flow(ou, h, intervals, 16)?;
    let u_h = semigroup(ou.generator(), h)?;
    let mut mean = ou.y0().clone();
    let mut acc = 0.0;
    for (k, w) in simpson_weights(intervals).into_iter().enumerate() {
        if k > 0 {
            mean = &u_h * &mean;
        }
        let (ha, hb) = kernels(k as f64 * h)?;
        acc += w * (mean.dot(&ha) * mean.dot(&hb) + (&q_y[k] * &ha).dot(&hb));
    }
    Ok(spec.noise_cov().quad_form(gamma) * acc * h / 3.0)
}
