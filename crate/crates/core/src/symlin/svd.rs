use super::mat::Mat;
use super::sym::SymMat;
use super::SymlinError;
use crate::scalar::Real;

const MAX_SWEEPS: usize = 80;

/// Thin singular value decomposition `A = U diag(σ) Vᵀ` with a full square `V`.
///
/// `sigma` has one entry per column of `A` (sorted descending, trailing zeros
/// for wide or rank-deficient inputs), so the trailing columns of `v` span
/// the null space of `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Svd<T> {
    pub u: Mat<T>,
    pub sigma: Vec<T>,
    pub v: Mat<T>,
}

impl<T: Real> Svd<T> {
    pub fn sigma_max(&self) -> T {
        self.sigma.first().copied().unwrap_or_else(T::zero)
    }

    /// Smallest of the first `min(rows, cols)` singular values.
    pub fn sigma_min(&self) -> T {
        let k = self.u.rows().min(self.sigma.len());
        if k == 0 {
            return T::zero();
        }
        self.sigma[k - 1]
    }

    pub fn rank(&self, tol_rel: T) -> usize {
        let smax = self.sigma_max();
        if smax == T::zero() {
            return 0;
        }
        self.sigma.iter().filter(|&&s| s > tol_rel * smax).count()
    }

    /// Orthonormal basis (as columns) of the null space at relative tolerance `tol_rel`.
    pub fn null_space(&self, tol_rel: T) -> Mat<T> {
        let r = self.rank(tol_rel);
        let n = self.v.rows();
        Mat::from_fn(n, n - r, |i, j| self.v[(i, r + j)])
    }

    /// Minimum-norm least-squares solution of `A x = b`, discarding singular
    /// values below `tol_rel · σ_max`.
    pub fn solve_least_squares(&self, b: &[T], tol_rel: T) -> Vec<T> {
        let r = self.rank(tol_rel);
        let mut x = vec![T::zero(); self.v.rows()];
        for k in 0..r {
            let coef: T =
                (0..self.u.rows()).map(|i| self.u[(i, k)] * b[i]).sum::<T>() / self.sigma[k];
            for (i, xi) in x.iter_mut().enumerate() {
                *xi += coef * self.v[(i, k)];
            }
        }
        x
    }
}

/// One-sided Jacobi (Hestenes) singular value decomposition.
pub fn svd<T: Real>(a: &Mat<T>) -> Result<Svd<T>, SymlinError> {
    let (m, n) = (a.rows(), a.cols());
    let mut w = a.clone();
    let mut v = Mat::identity(n);
    let eps = T::epsilon();
    // Columns whose squared norm falls below this are numerically zero; rotating
    // against them only churns rounding noise.
    let negligible = eps * eps * a.as_slice().iter().map(|&x| x * x).sum::<T>();
    let mut converged = n < 2;
    // Largest column cosine met in the last sweep.
    let mut worst = T::zero();
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        worst = T::zero();
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let mut alpha = T::zero();
                let mut beta = T::zero();
                let mut gamma = T::zero();
                for i in 0..m {
                    let wp = w[(i, p)];
                    let wq = w[(i, q)];
                    alpha += wp * wp;
                    beta += wq * wq;
                    gamma += wp * wq;
                }
                if gamma == T::zero()
                    || gamma.abs() <= eps * (alpha * beta).sqrt()
                    || alpha <= negligible
                    || beta <= negligible
                {
                    continue;
                }
                worst = worst.max(gamma.abs() / (alpha * beta).sqrt());
                rotated = true;
                let zeta = (beta - alpha) / (T::c(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let wp = w[(i, p)];
                    let wq = w[(i, q)];
                    w[(i, p)] = c * wp - s * wq;
                    w[(i, q)] = s * wp + c * wq;
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        converged = !rotated;
    }
    // Rounding can keep a few rotations alive indefinitely; columns that are
    // orthogonal to within √eps are accepted.
    if !converged && worst > eps.sqrt() {
        return Err(SymlinError::ConvergenceFailure {
            iterations: MAX_SWEEPS,
        });
    }

    let norms: Vec<T> = (0..n)
        .map(|j| (0..m).map(|i| w[(i, j)] * w[(i, j)]).sum::<T>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| {
        norms[y]
            .partial_cmp(&norms[x])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let sigma: Vec<T> = order.iter().map(|&k| norms[k]).collect();
    let v_sorted = Mat::from_fn(n, n, |i, j| v[(i, order[j])]);
    let k = m.min(n);
    let u = Mat::from_fn(m, k, |i, j| {
        let s = sigma[j];
        if s > T::zero() {
            w[(i, order[j])] / s
        } else {
            T::zero()
        }
    });
    Ok(Svd {
        u,
        sigma,
        v: v_sorted,
    })
}

/// Dense view accepted by [`numerical_rank`].
pub trait DenseView<T> {
    fn dense(&self) -> Mat<T>;
}

impl<T: Real> DenseView<T> for Mat<T> {
    fn dense(&self) -> Mat<T> {
        self.clone()
    }
}

impl<T: Real> DenseView<T> for SymMat<T> {
    fn dense(&self) -> Mat<T> {
        self.to_mat()
    }
}

/// Number of singular values above `tol_rel · σ_max`; zero for the zero matrix.
pub fn numerical_rank<T: Real>(m: &impl DenseView<T>, tol_rel: T) -> usize {
    let d = m.dense();
    // Work on the orientation with fewer columns so Jacobi touches fewer pairs.
    let d = if d.cols() > d.rows() {
        d.transpose()
    } else {
        d
    };
    match svd(&d) {
        Ok(s) => s.rank(tol_rel),
        Err(_) => d.rows().min(d.cols()),
    }
}
