//! Closed-form characteristic functionals of Y(t) and V(t) against exact-sample Monte Carlo.

use tensor_heston::analytics::{char_v, char_y, empirical_char_v, empirical_char_y, exp_moment_bound};
use tensor_heston::operator::{Covariance, HVector, OperatorMatrix};
use tensor_heston::ou::{sample_y_exact, OuSpec};

fn main() -> tensor_heston::Result<()> {
    let a = OperatorMatrix::from_row_slice(2, 2, &[-1.0, 0.3, -0.2, -0.8]);
    let spec = OuSpec::new(a, OperatorMatrix::identity(2, 2), Covariance::identity(2), HVector::zeros(2))?;
    let t = 1.0;
    let samples = sample_y_exact(&spec, t, 200_000, 7, 200)?;

    let f = HVector::from_vec(vec![0.8, -0.4]);
    let g = HVector::from_vec(vec![0.3, 0.5]);
    let cy = char_y(&spec, t, &f, 200)?;
    let ey = empirical_char_y(&samples, &f);
    println!("E exp(i<Y,f>):   closed {cy:.5}  mc {:.5}  z {:.2}", ey.value(), ey.z_score(cy));

    let cv = char_v(&spec, t, &f, &g, 200)?;
    let ev = empirical_char_v(&samples, &f, &g);
    println!("E exp(i<V,f⊗g>): closed {cv:.5}  mc {:.5}  z {:.2}", ev.value(), ev.z_score(cv));

    let k = exp_moment_bound(&spec, t, 0.0, 200)?.k;
    let theta = 0.5 / (4.0 * k);
    let bound = exp_moment_bound(&spec, t, theta, 200)?.bound;
    let mc = samples.iter().map(|y| (theta * y.norm_squared()).exp()).sum::<f64>() / samples.len() as f64;
    println!("E exp(θ‖V‖) = {mc:.4} <= {bound:.4}");
    Ok(())
}
