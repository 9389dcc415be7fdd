//! Structure of the variance operator V = Y ⊗ Y: norm, square root and the Γ_Z factorization.

use tensor_heston::operator::HVector;
use tensor_heston::variance::{gamma_factor, sqrt_v, variance_of};

fn main() -> tensor_heston::Result<()> {
    let y = HVector::from_vec(vec![0.6, -1.2, 0.3]);
    let v = variance_of(&y);
    println!("V = {}", v.matrix());
    println!("‖V‖_HS = {:.12}, |Y|² = {:.12}", v.hs_norm(), y.norm_squared());

    let root = sqrt_v(&v);
    println!("‖√V √V − V‖ = {:.2e}", (&root * &root - v.matrix()).norm());

    let z = HVector::from_vec(vec![0.0, 0.6, 0.8]);
    let g = gamma_factor(&z, &y)?;
    println!("Γ_Z = {g}");
    println!("‖Γ_Z Γ_Z* − V‖ = {:.2e}", (&g * g.transpose() - v.matrix()).norm());
    Ok(())
}
