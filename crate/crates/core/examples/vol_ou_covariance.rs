//! Covariance and conditional characteristic functional of the volatility-modulated process X.

use num_complex::Complex64;
use tensor_heston::mc::{par_map, sample_covariance, ComplexEstimate};
use tensor_heston::operator::{Covariance, HVector, OperatorMatrix};
use tensor_heston::ou::{OuSpec, TimeGrid};
use tensor_heston::variance::UnitProcess;
use tensor_heston::vol_ou::{cond_char_x, cov_x, terminal_x, XSpec};

fn main() -> tensor_heston::Result<()> {
    let ou = OuSpec::new(
        OperatorMatrix::from_diagonal(&HVector::from_vec(vec![-1.0, -2.0])),
        OperatorMatrix::identity(2, 2),
        Covariance::identity(2),
        HVector::from_vec(vec![1.0, 0.5]),
    )?;
    let c = OperatorMatrix::from_row_slice(2, 2, &[-0.5, 0.2, 0.0, -1.0]);
    let unit = UnitProcess::constant(HVector::from_vec(vec![0.6, 0.8]))?;
    let spec = XSpec::new(c, Covariance::diagonal(&[1.0, 0.5])?, HVector::zeros(2), unit, ou)?;

    let grid = TimeGrid::new(1.0, 200)?;
    let ends: Vec<HVector> = par_map(40_000, |p| terminal_x(&spec, &grid, 3, p as u64).x);
    println!("Q_X(1) closed form {}", cov_x(&spec, 1.0, 200)?.matrix());
    println!("Monte Carlo        {}", sample_covariance(&ends));

    let f = HVector::from_vec(vec![1.0, -0.5]);
    let cond = cond_char_x(&spec, 1.0, 200, &f, 20_000, 4)?;
    let emp = ComplexEstimate::from_samples(&ends.iter().map(|x| Complex64::from_polar(1.0, x.dot(&f))).collect::<Vec<_>>());
    println!("E exp(i<X,f>): conditional {:.5}, empirical {:.5}", cond.value(), emp.value());
    Ok(())
}
