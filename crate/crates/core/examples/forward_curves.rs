//! Forward curves in the weighted Filipovic space: reproducing kernel, shifts and
//! the covariance of forward prices under a kernel-frame model.

use tensor_heston::filipovic::{forward_cov, inner_w, make_h, shift, CurveElement, FilipovicSpace, ForwardMc, KernelFrame};
use tensor_heston::operator::{Covariance, HVector, OperatorMatrix};
use tensor_heston::ou::OuSpec;
use tensor_heston::variance::UnitProcess;
use tensor_heston::vol_ou::XSpec;

fn main() -> tensor_heston::Result<()> {
    let space = FilipovicSpace::with_default_grid(0.1)?;
    let curve = CurveElement::from_fn(&space, 0.02, |y| 0.01 * (-0.5 * y).exp());
    for x in [0.5, 1.0, 3.0] {
        let via_kernel = inner_w(&space, &curve, &make_h(&space, x)?)?;
        println!("f({x}) = {:.6}, <f, h_x> = {via_kernel:.6}", curve.eval(&space, x));
    }
    let shifted = shift(&space, 1.0, &curve)?;
    println!("(S(1) f)(2) = {:.6}, f(3) = {:.6}", shifted.eval(&space, 2.0), curve.eval(&space, 3.0));

    let frame = KernelFrame::new(space, &[1.0, 3.0])?;
    let ou = OuSpec::new(
        OperatorMatrix::from_diagonal(&HVector::from_vec(vec![-1.0, -0.5])),
        OperatorMatrix::identity(2, 2),
        Covariance::identity(2),
        HVector::from_vec(vec![0.5, -0.3]),
    )?;
    let unit = UnitProcess::constant(HVector::from_vec(vec![0.6, 0.8]))?;
    let spec = XSpec::new(frame.shift_generator()?, Covariance::diagonal(&[0.8, 0.4])?, HVector::zeros(2), unit, ou)?;
    let mc = ForwardMc { steps: 50, paths: 20_000, seed: 5, quad_steps: 200 };
    for (x, y) in [(0.5, 2.0), (1.0, 1.0)] {
        let cov = forward_cov(&spec, &frame, 1.0, x, y, &mc)?;
        println!(
            "Cov(F(1,{x}), F(1,{y})): mc {:.5} ± {:.5}, closed form {:.5}",
            cov.mc.mean,
            cov.mc.stderr,
            cov.closed_form.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
