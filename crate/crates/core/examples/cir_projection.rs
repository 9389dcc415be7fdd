//! Projection of V onto an eigenvector of A*: the projected variance is a CIR process.

use tensor_heston::mc::Estimate;
use tensor_heston::operator::{basis, Covariance, HVector, OperatorMatrix};
use tensor_heston::ou::{OuSpec, TimeGrid};
use tensor_heston::projection::{cir_mean, cir_params, projection_rms_error, terminal_v_proj};

fn main() -> tensor_heston::Result<()> {
    let spec = OuSpec::new(
        OperatorMatrix::from_diagonal(&HVector::from_vec(vec![-1.0, -0.5])),
        OperatorMatrix::identity(2, 2),
        Covariance::diagonal(&[1.0, 0.4])?,
        HVector::from_vec(vec![0.7, 1.0]),
    )?;
    let f = basis(2, 0);
    let params = cir_params(&spec, &f, -1.0)?;
    println!("b = {:.3}, kappa = {:.3}, xi = {:.3}, v0 = {:.3}", params.b, params.kappa, params.xi, params.v0);

    for t in [0.5, 1.0, 2.0] {
        let grid = TimeGrid::new(t, (512.0 * t) as usize)?;
        let ends = terminal_v_proj(&spec, &f, &grid, 10_000, 21)?;
        let est = Estimate::from_samples(&ends.iter().map(|s| s.v).collect::<Vec<_>>());
        println!("t = {t}: mc {:.4} ± {:.4}, cir mean {:.4}", est.mean, est.stderr, cir_mean(&params, t));
    }

    let grid = TimeGrid::new(1.0, 256)?;
    let rms = projection_rms_error(&spec, &f, &grid, 2000, 22)?;
    println!("pathwise rms of v − <Y,f>² at dt = 1/256: {rms:.4}");
    Ok(())
}
