//! Closed-form characteristic functionals and exponential-moment bounds for `Y` and `V = Y ⊗ Y`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::mc::ComplexEstimate;
use crate::operator::HVector;
use crate::ou::{cov_y, semigroup, OuSpec};

/// `E[exp(i⟨Y(t), f⟩)] = exp(i⟨U(t)Y0, f⟩ − ½⟨Q_{Y(t)} f, f⟩)`.
pub fn char_y(spec: &OuSpec, t: f64, f: &HVector, quad_steps: usize) -> Result<Complex64> {
    check_dim("char_y f", spec.dim(), f.len())?;
    let mean = semigroup(spec.generator(), t)? * spec.y0();
    let var = cov_y(spec, t, quad_steps)?.quad_form(f);
    Ok(Complex64::new(-0.5 * var, mean.dot(f)).exp())
}

/// Variances of `⟨Y(t), f⟩`, `⟨Y(t), g⟩` and their covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VcIntegrals {
    pub v_f: f64,
    pub v_g: f64,
    pub c_fg: f64,
}

pub fn vc_integrals(spec: &OuSpec, t: f64, f: &HVector, g: &HVector, quad_steps: usize) -> Result<VcIntegrals> {
    check_dim("vc_integrals f", spec.dim(), f.len())?;
    check_dim("vc_integrals g", spec.dim(), g.len())?;
    let q = cov_y(spec, t, quad_steps)?;
    let qf = q.matrix() * f;
    Ok(VcIntegrals {
        v_f: qf.dot(f),
        v_g: q.quad_form(g),
        c_fg: qf.dot(g),
    })
}

impl VcIntegrals {
    /// `(1 + v_f v_g − c² − 2ic)^{−1/2}` on the principal branch.
    pub fn char_v(&self) -> Complex64 {
        let z = Complex64::new(1.0 + self.v_f * self.v_g - self.c_fg * self.c_fg, -2.0 * self.c_fg);
        z.sqrt().inv()
    }
}

/// `E[exp(i⟨⟨V(t), f ⊗ g⟩⟩)]` for a centred driver (`Y0 = 0`).
pub fn char_v(spec: &OuSpec, t: f64, f: &HVector, g: &HVector, quad_steps: usize) -> Result<Complex64> {
    if spec.y0().iter().any(|&x| x != 0.0) {
        return Err(Error::Unsupported(
            "characteristic functional of V is only available for Y0 = 0".into(),
        ));
    }
    Ok(vc_integrals(spec, t, f, g, quad_steps)?.char_v())
}

/// Exponential-moment bound `E[exp(θ‖V(t)‖)] ≤ e^{2θ|U(t)Y0|²} / √(1 − 4θk)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentBound {
    pub bound: f64,
    /// `k = E|∫_0^t U(t−s) η dW(s)|² = trace Q_{Y(t)}`.
    pub k: f64,
    pub theta: f64,
}

pub fn exp_moment_bound(spec: &OuSpec, t: f64, theta: f64, quad_steps: usize) -> Result<MomentBound> {
    let k = cov_y(spec, t, quad_steps)?.trace();
    let upper = if k > 0.0 { 1.0 / (4.0 * k) } else { f64::INFINITY };
    if !(theta >= 0.0 && theta <= upper) {
        return Err(Error::Domain {
            name: "theta",
            value: theta,
            range: format!("[0, {upper}]"),
        });
    }
    let mean = semigroup(spec.generator(), t)? * spec.y0();
    let bound = (2.0 * theta * mean.norm_squared()).exp() / (1.0 - 4.0 * theta * k).sqrt();
    Ok(MomentBound { bound, k, theta })
}

/// Empirical `E[exp(i⟨Y, f⟩)]` over samples of `Y`.
pub fn empirical_char_y(samples: &[HVector], f: &HVector) -> ComplexEstimate {
    let z: Vec<Complex64> = samples
        .iter()
        .map(|y| Complex64::from_polar(1.0, y.dot(f)))
        .collect();
    ComplexEstimate::from_samples(&z)
}

/// Empirical `E[exp(i⟨Y, f⟩⟨Y, g⟩)]` over samples of `Y`.
pub fn empirical_char_v(samples: &[HVector], f: &HVector, g: &HVector) -> ComplexEstimate {
    let z: Vec<Complex64> = samples
        .iter()
        .map(|y| Complex64::from_polar(1.0, y.dot(f) * y.dot(g)))
        .collect();
    ComplexEstimate::from_samples(&z)
}
