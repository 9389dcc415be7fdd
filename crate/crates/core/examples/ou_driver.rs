//! Simulates the Gaussian driver both ways and compares the terminal covariance
//! with the closed form, and the long-horizon covariance with the Lyapunov solution.

use tensor_heston::mc::sample_covariance;
use tensor_heston::operator::{Covariance, HVector, OperatorMatrix};
use tensor_heston::ou::{cov_y, sample_y_exact, simulate_y_paths, stationary_cov_y, OuSpec, TimeGrid};

fn main() -> tensor_heston::Result<()> {
    let a = OperatorMatrix::from_row_slice(2, 2, &[-1.0, 0.4, 0.0, -1.5]);
    let spec = OuSpec::new(a, OperatorMatrix::identity(2, 2), Covariance::diagonal(&[1.0, 0.5])?, HVector::from_vec(vec![1.0, -0.5]))?;

    let closed = cov_y(&spec, 1.0, 200)?;
    let exact = sample_y_exact(&spec, 1.0, 50_000, 1, 200)?;
    let grid = TimeGrid::new(1.0, 200)?;
    let euler: Vec<HVector> = simulate_y_paths(&spec, &grid, 50_000, 1).terminal().cloned().collect();

    println!("Q_Y(1) closed form {}", closed.matrix());
    println!("exact sampler      {}", sample_covariance(&exact));
    println!("Euler, dt = 1/200  {}", sample_covariance(&euler));

    let stationary = stationary_cov_y(&spec)?;
    let long = cov_y(&spec, 20.0, 4000)?;
    println!(
        "stationary covariance, |Q_Y(20) - Q_Y| = {:.2e}",
        (long.matrix() - stationary.matrix()).norm()
    );
    Ok(())
}
