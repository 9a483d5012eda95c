use super::mat::Mat;
use super::sym::{smat, svec, tau, SVec, SymMat};
use super::SymlinError;
use crate::scalar::Real;

/// Symmetric Kronecker product of two symmetric matrices.
///
/// The returned `τ(n)×τ(n)` matrix `K` satisfies
/// `K·svec(H) = svec(½(A H Bᵀ + B H Aᵀ))` for every symmetric `H`.
pub fn skron<T: Real>(a: &SymMat<T>, b: &SymMat<T>) -> Result<Mat<T>, SymlinError> {
    if a.dim() != b.dim() {
        return Err(SymlinError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    skron_general(&a.to_mat(), &b.to_mat())
}

/// Symmetric Kronecker product for arbitrary square `A`, `B` of equal size.
pub fn skron_general<T: Real>(a: &Mat<T>, b: &Mat<T>) -> Result<Mat<T>, SymlinError> {
    for m in [a, b] {
        if !m.is_square() {
            return Err(SymlinError::NotSquare {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
    }
    let n = a.rows();
    if b.rows() != n {
        return Err(SymlinError::DimensionMismatch {
            expected: n,
            found: b.rows(),
        });
    }
    let dim = tau(n);
    let bt = b.transpose();
    let at = a.transpose();
    let half = T::c(0.5);
    let mut out = Mat::zeros(dim, dim);
    for k in 0..dim {
        let mut e = vec![T::zero(); dim];
        e[k] = T::one();
        let h = smat(&SVec::new(e)?).to_mat();
        let ahb = a.matmul(&h).matmul(&bt);
        let bha = b.matmul(&h).matmul(&at);
        let img = SymMat::from_fn(n, |i, j| half * (ahb[(i, j)] + bha[(i, j)]));
        out.set_column(k, svec(&img).as_slice());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_gives_identity() {
        let k = skron(&SymMat::<f64>::identity(3), &SymMat::identity(3)).unwrap();
        assert!(k.sub(&Mat::identity(6)).max_abs() < 1e-15);
    }

    #[test]
    fn diagonal_example_matches_formula() {
        let a = SymMat::<f64>::diag(&[1.0, 2.0]);
        let b = SymMat::diag(&[3.0, 4.0]);
        let h = SymMat::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let k = skron(&a, &b).unwrap();
        let got = k.matvec(svec(&h).as_slice());
        // ½(AHB + BHA) = [[3, 5], [5, 8]] entrywise for diagonal A, B.
        let want = svec(&SymMat::from_rows(&[vec![3.0, 5.0], vec![5.0, 8.0]]).unwrap());
        for (g, w) in got.iter().zip(want.as_slice()) {
            assert!((g - w).abs() < 1e-14);
        }
    }

    #[test]
    fn mismatched_sizes_rejected() {
        let err = skron(&SymMat::<f64>::identity(2), &SymMat::identity(3)).unwrap_err();
        assert!(matches!(err, SymlinError::DimensionMismatch { .. }));
    }
}
