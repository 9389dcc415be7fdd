//! Linear algebra on a rank-`N` Galerkin truncation of a separable Hilbert space.
//!
//! Elements are coefficient vectors in a fixed orthonormal basis `{e_n}` and
//! bounded operators are dense `N × N` matrices acting on those coefficients.
//! In orthonormal coordinates the adjoint is the transpose, the Hilbert-Schmidt
//! inner product is `trace(Sᵀ T)` and the rank-one operator `f ⊗ g := ⟨f, ·⟩ g`
//! is the outer product `g fᵀ`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{check_dim, Error, Result};

/// Element of the truncated Hilbert space.
pub type HVector = DVector<f64>;

/// Bounded (and, at finite rank, Hilbert-Schmidt) operator on the truncated space.
pub type OperatorMatrix = DMatrix<f64>;

/// Default tolerance for positive semi-definiteness, relative to the largest eigenvalue.
pub const TOL_PSD: f64 = 1e-10;

/// The `i`-th orthonormal basis vector of the rank-`n` space.
pub fn basis(n: usize, i: usize) -> HVector {
    let mut e = HVector::zeros(n);
    e[i] = 1.0;
    e
}

pub fn inner(f: &HVector, g: &HVector) -> Result<f64> {
    check_dim("inner", f.len(), g.len())?;
    Ok(f.dot(g))
}

/// `f ⊗ g`, the operator `h ↦ ⟨f, h⟩ g`.
pub fn tensor(f: &HVector, g: &HVector) -> Result<OperatorMatrix> {
    check_dim("tensor", f.len(), g.len())?;
    Ok(g * f.transpose())
}

/// `f ⊗ f`.
pub fn tensor_square(f: &HVector) -> OperatorMatrix {
    f * f.transpose()
}

/// Hilbert-Schmidt inner product `⟨⟨S, T⟩⟩ = Σ_n ⟨S e_n, T e_n⟩`.
pub fn hs_inner(s: &OperatorMatrix, t: &OperatorMatrix) -> Result<f64> {
    check_dim("hs_inner rows", s.nrows(), t.nrows())?;
    check_dim("hs_inner cols", s.ncols(), t.ncols())?;
    Ok(s.dot(t))
}

/// Hilbert-Schmidt norm (Frobenius norm of the coordinate matrix).
pub fn hs_norm(t: &OperatorMatrix) -> f64 {
    t.norm()
}

pub fn adjoint(t: &OperatorMatrix) -> OperatorMatrix {
    t.transpose()
}

/// `(M + Mᵀ) / 2`.
pub fn symmetrize(m: &OperatorMatrix) -> OperatorMatrix {
    (m + m.transpose()) * 0.5
}

fn max_abs(m: &OperatorMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Symmetric PSD square root by eigendecomposition.
///
/// Eigenvalues in `[-tol · λ_max, 0)` are clamped to zero; anything more
/// negative, or an asymmetry larger than `tol` relative to the largest entry,
/// is rejected.
pub fn psd_sqrt(q: &OperatorMatrix, tol: f64) -> Result<OperatorMatrix> {
    psd_sqrt_named(q, tol, "operator")
}

pub(crate) fn psd_sqrt_named(q: &OperatorMatrix, tol: f64, context: &str) -> Result<OperatorMatrix> {
    if !q.is_square() {
        return Err(Error::DimensionMismatch {
            context: "psd_sqrt",
            expected: q.nrows(),
            found: q.ncols(),
        });
    }
    if q.iter().any(|x| !x.is_finite()) {
        return Err(Error::NotPsd {
            context: context.to_string(),
            detail: "non-finite entry".into(),
        });
    }
    let scale = max_abs(q);
    let asym = max_abs(&(q - q.transpose()));
    if asym > tol * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotPsd {
            context: context.to_string(),
            detail: format!("asymmetry {asym:e} exceeds tolerance {:e}", tol * scale),
        });
    }
    let eig = SymmetricEigen::new(symmetrize(q));
    let lambda_max = eig.eigenvalues.iter().fold(0.0_f64, |a, &l| a.max(l));
    let floor = -tol * lambda_max.max(scale);
    let mut roots = eig.eigenvalues.clone();
    for l in roots.iter_mut() {
        if *l < floor {
            return Err(Error::NotPsd {
                context: context.to_string(),
                detail: format!("eigenvalue {l:e} below -{:e}", -floor),
            });
        }
        *l = l.max(0.0).sqrt();
    }
    let v = &eig.eigenvectors;
    let r = v * DMatrix::from_diagonal(&roots) * v.transpose();
    Ok(symmetrize(&r))
}

/// A validated trace-class covariance operator together with its square root.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariance {
    matrix: OperatorMatrix,
    sqrt: OperatorMatrix,
}

impl Covariance {
    pub fn new(matrix: OperatorMatrix) -> Result<Self> {
        Self::named(matrix, "covariance")
    }

    pub(crate) fn named(matrix: OperatorMatrix, context: &str) -> Result<Self> {
        let sqrt = psd_sqrt_named(&matrix, TOL_PSD, context)?;
        Ok(Self {
            matrix: symmetrize(&matrix),
            sqrt,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: OperatorMatrix::identity(n, n),
            sqrt: OperatorMatrix::identity(n, n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            matrix: OperatorMatrix::zeros(n, n),
            sqrt: OperatorMatrix::zeros(n, n),
        }
    }

    pub fn diagonal(d: &[f64]) -> Result<Self> {
        Self::new(OperatorMatrix::from_diagonal(&HVector::from_column_slice(d)))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &OperatorMatrix {
        &self.matrix
    }

    /// `Q^{1/2}`.
    pub fn sqrt(&self) -> &OperatorMatrix {
        &self.sqrt
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// `⟨Q f, f⟩ = |Q^{1/2} f|²`.
    pub fn quad_form(&self, f: &HVector) -> f64 {
        f.dot(&(&self.matrix * f))
    }

    pub fn into_matrix(self) -> OperatorMatrix {
        self.matrix
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vec_strategy(n: usize) -> impl Strategy<Value = HVector> {
        prop::collection::vec(-3.0..3.0_f64, n).prop_map(HVector::from_vec)
    }

    #[test]
    fn inner_examples() {
        let e1 = basis(2, 0);
        let e2 = basis(2, 1);
        assert_eq!(inner(&e1, &e1).unwrap(), 1.0);
        assert_eq!(inner(&e1, &e2).unwrap(), 0.0);
        let f = HVector::from_vec(vec![1.0, 2.0]);
        let g = HVector::from_vec(vec![3.0, 4.0]);
        assert_eq!(inner(&f, &g).unwrap(), 11.0);
        assert!(matches!(
            inner(&f, &basis(3, 0)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn tensor_examples() {
        let e1 = basis(2, 0);
        let e2 = basis(2, 1);
        let t = tensor(&e1, &e2).unwrap();
        assert_eq!(&t * &e1, e2);
        assert_eq!(&t * &e2, HVector::zeros(2));
        let f = HVector::from_vec(vec![3.0, 4.0]);
        let g = HVector::from_vec(vec![0.0, 1.0]);
        assert!((hs_norm(&tensor(&f, &g).unwrap()) - 5.0).abs() < 1e-15);
        assert!(tensor(&f, &basis(3, 1)).is_err());
    }

    #[test]
    fn hs_inner_examples() {
        let id = OperatorMatrix::identity(4, 4);
        assert_eq!(hs_inner(&id, &id).unwrap(), 4.0);
        assert_eq!(hs_inner(&id, &OperatorMatrix::zeros(4, 4)).unwrap(), 0.0);
        let y = HVector::from_vec(vec![0.3, -1.2, 2.0]);
        let f = HVector::from_vec(vec![1.0, 0.5, -0.25]);
        let g = HVector::from_vec(vec![-2.0, 0.1, 0.7]);
        let v = tensor_square(&y);
        let lhs = hs_inner(&v, &tensor(&f, &g).unwrap()).unwrap();
        assert!((lhs - y.dot(&f) * y.dot(&g)).abs() < 1e-14);
        assert!(hs_inner(&id, &OperatorMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn psd_sqrt_examples() {
        let q = OperatorMatrix::from_diagonal(&HVector::from_vec(vec![4.0, 9.0]));
        let r = psd_sqrt(&q, TOL_PSD).unwrap();
        assert!((r[(0, 0)] - 2.0).abs() < 1e-14 && (r[(1, 1)] - 3.0).abs() < 1e-14);
        assert!(r[(0, 1)].abs() < 1e-14);
        let id = OperatorMatrix::identity(3, 3);
        assert!((psd_sqrt(&id, TOL_PSD).unwrap() - &id).norm() < 1e-14);
    }

    #[test]
    fn psd_sqrt_rejects_indefinite_and_asymmetric() {
        let q = OperatorMatrix::from_diagonal(&HVector::from_vec(vec![1.0, -0.5]));
        assert!(matches!(psd_sqrt(&q, TOL_PSD), Err(Error::NotPsd { .. })));
        let q = OperatorMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.0, 1.0]);
        assert!(matches!(psd_sqrt(&q, TOL_PSD), Err(Error::NotPsd { .. })));
        // tiny negative round-off is clamped
        let q = OperatorMatrix::from_diagonal(&HVector::from_vec(vec![1.0, -1e-13]));
        let r = psd_sqrt(&q, TOL_PSD).unwrap();
        assert_eq!(r[(1, 1)], 0.0);
    }

    #[test]
    fn psd_sqrt_reconstructs_random_psd() {
        let mut seed = 7_u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        for _ in 0..20 {
            let b = OperatorMatrix::from_fn(6, 6, |_, _| next());
            let q = &b * b.transpose();
            let r = psd_sqrt(&q, TOL_PSD).unwrap();
            assert!((&r * &r - &q).norm() <= 1e-10 * q.norm().max(1.0));
        }
    }

    proptest! {
        #[test]
        fn tensor_applies_as_formula(f in vec_strategy(5), g in vec_strategy(5), h in vec_strategy(5)) {
            let t = tensor(&f, &g).unwrap();
            let lhs = &t * &h;
            let rhs = &g * f.dot(&h);
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + f.norm() * g.norm() * h.norm()));
        }

        #[test]
        fn tensor_norm_and_adjoint(f in vec_strategy(6), g in vec_strategy(6)) {
            let t = tensor(&f, &g).unwrap();
            let expected = f.norm() * g.norm();
            prop_assert!((hs_norm(&t) - expected).abs() <= 1e-12 * expected.max(1e-300));
            prop_assert_eq!(adjoint(&t), tensor(&g, &f).unwrap());
        }

        #[test]
        fn hs_inner_of_rank_one(f in vec_strategy(4), g in vec_strategy(4), u in vec_strategy(4), v in vec_strategy(4)) {
            let lhs = hs_inner(&tensor(&f, &g).unwrap(), &tensor(&u, &v).unwrap()).unwrap();
            let rhs = f.dot(&u) * g.dot(&v);
            prop_assert!((lhs - rhs).abs() <= 1e-11 * (1.0 + f.norm() * g.norm() * u.norm() * v.norm()));
        }

        #[test]
        fn psd_sqrt_of_square(entries in prop::collection::vec(-2.0..2.0_f64, 16)) {
            let b = OperatorMatrix::from_vec(4, 4, entries);
            let r = psd_sqrt(&(&b * b.transpose()), TOL_PSD).unwrap();
            let r2 = psd_sqrt(&(&r * &r), TOL_PSD).unwrap();
            prop_assert!((r2 - &r).norm() <= 1e-6 * r.norm().max(1.0));
        }
    }
}
