use super::{jacobian, residual, KktError};
use crate::ipm::PrimalDualPoint;
use crate::symlin::{eig, svd, svec, tau, EigDecomp};
use crate::Mat;
use crate::{ProblemInstance, SymMat};

/// Points with a larger KKT residual are refused by [`certify`].
pub const NEAR_OPTIMAL_RESIDUAL: f64 = 1e-6;

/// Regularity of a near-optimal primal-dual point. Every flag comes with the
/// quantity it was decided by.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularityCertificate {
    pub rank_x: usize,
    pub rank_z: usize,
    pub strictly_complementary: bool,
    /// `λ_min(X + Z)` relative to the eigenvalue scale.
    pub complementarity_margin: f64,
    pub primal_nondegenerate: bool,
    /// Smallest relative singular value of the stacked primal test matrix.
    pub primal_margin: f64,
    pub dual_nondegenerate: bool,
    pub dual_margin: f64,
    pub jacobian_nonsingular: bool,
    pub sigma_min_rel: f64,
    pub tol: f64,
}

impl RegularityCertificate {
    /// Strict complementarity together with both non-degeneracy conditions.
    pub fn is_regular(&self) -> bool {
        self.strictly_complementary && self.primal_nondegenerate && self.dual_nondegenerate
    }
}

/// `svec(Q (e_i e_jᵀ + e_j e_iᵀ) Qᵀ)`, normalized.
fn rotated_unit(q: &Mat, i: usize, j: usize) -> Vec<f64> {
    let n = q.rows();
    let s = SymMat::from_fn(n, |a, b| q[(a, i)] * q[(b, j)] + q[(a, j)] * q[(b, i)]);
    let v = svec(&s).into_vec();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

/// Relative singular value `σ_k / σ_1` of the stacked rows, `0` if `k` exceeds
/// the number of columns.
fn rank_margin(rows: &[Vec<f64>], cols: usize) -> Result<(usize, f64), KktError> {
    let k = rows.len();
    if k == 0 {
        return Ok((0, 1.0));
    }
    let m = Mat::from_rows(rows);
    let s = svd(&m.transpose()).map_err(|e| KktError::Numerical(e.to_string()))?;
    if k > cols {
        return Ok((k, 0.0));
    }
    let smax = s.sigma_max();
    let margin = if smax > 0.0 { s.sigma[k - 1] / smax } else { 0.0 };
    Ok((k, margin))
}

fn rank_with_scale(e: &EigDecomp<f64>, tol: f64, scale: f64) -> usize {
    e.lambdas.iter().filter(|&&l| l > tol * scale).count()
}

/// Rank, complementarity, non-degeneracy and Jacobian tests at a near-optimal
/// point.
///
/// Ranks count eigenvalues above `tol · max(1, ‖X‖₂, ‖Z‖₂)`, a scale shared
/// by `X` and `Z` so that a vanishing matrix has rank zero.
pub fn certify(
    inst: &ProblemInstance,
    pt: &PrimalDualPoint,
    tol: f64,
) -> Result<RegularityCertificate, KktError> {
    let res = residual(inst, pt)?;
    let r = res.max_block_norm();
    if !(r <= NEAR_OPTIMAL_RESIDUAL) {
        return Err(KktError::NotNearOptimal { residual: r });
    }
    let n = inst.n();
    let m = inst.m();
    let tn = tau(n);
    let num = |e: crate::symlin::SymlinError| KktError::Numerical(e.to_string());
    let ex = eig(&pt.x).map_err(num)?;
    let ez = eig(&pt.z).map_err(num)?;
    let scale = 1f64
        .max(ex.max_eigenvalue().abs())
        .max(ez.max_eigenvalue().abs());
    let rank_x = rank_with_scale(&ex, tol, scale);
    let rank_z = rank_with_scale(&ez, tol, scale);
    let sum_min = eig(&pt.x.add(&pt.z)).map_err(num)?.min_eigenvalue();

    // ℛ(𝒜*) ∩ 𝒯_X^⊥ = {0}: the constraint rows together with the basis of
    // the complementary block Q₂ W Q₂ᵀ must be independent.
    let mut rows: Vec<Vec<f64>> = (0..m).map(|i| inst.atilde.row(i).to_vec()).collect();
    for i in rank_x..n {
        for j in i..n {
            rows.push(rotated_unit(&ex.q, i, j));
        }
    }
    let (_, primal_margin) = rank_margin(&rows, tn)?;

    // ℛ(𝒜*) + 𝒯_Z = 𝕊ⁿ with 𝒯_Z spanned by the blocks touching range(Z).
    let mut rows: Vec<Vec<f64>> = (0..m).map(|i| inst.atilde.row(i).to_vec()).collect();
    for i in 0..rank_z {
        for j in i..n {
            rows.push(rotated_unit(&ez.q, i, j));
        }
    }
    let dual_margin = if rows.is_empty() {
        0.0
    } else {
        let mat = Mat::from_rows(&rows);
        let s = svd(&mat.transpose()).map_err(num)?;
        let smax = s.sigma_max();
        // Spanning 𝕊ⁿ needs τ(n) singular values of the row stack.
        if rows.len() < tn || smax == 0.0 {
            0.0
        } else {
            s.sigma[tn - 1] / smax
        }
    };

    let jac = jacobian(inst, pt)?;
    Ok(RegularityCertificate {
        rank_x,
        rank_z,
        strictly_complementary: rank_x + rank_z == n,
        complementarity_margin: sum_min / scale,
        primal_nondegenerate: primal_margin > tol,
        primal_margin,
        dual_nondegenerate: dual_margin > tol,
        dual_margin,
        jacobian_nonsingular: jac.is_nonsingular(),
        sigma_min_rel: jac.sigma_min_rel(),
        tol,
    })
}
