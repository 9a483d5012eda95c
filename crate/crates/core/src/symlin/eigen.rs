use super::mat::Mat;
use super::sym::SymMat;
use super::SymlinError;
use crate::scalar::Real;

const MAX_QL_ITERATIONS: usize = 60;

/// Eigendecomposition `M = Q diag(λ) Qᵀ` of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigDecomp<T> {
    /// Orthogonal matrix whose columns are eigenvectors.
    pub q: Mat<T>,
    /// Eigenvalues in descending order, matching the columns of `q`.
    pub lambdas: Vec<T>,
}

impl<T: Real> EigDecomp<T> {
    pub fn reconstruct(&self) -> SymMat<T> {
        self.map_eigenvalues(|l| l)
    }

    /// `Q diag(f(λ)) Qᵀ`.
    pub fn map_eigenvalues(&self, f: impl Fn(T) -> T) -> SymMat<T> {
        let n = self.lambdas.len();
        let fl: Vec<T> = self.lambdas.iter().map(|&l| f(l)).collect();
        SymMat::from_fn(n, |i, j| {
            (0..n)
                .map(|k| self.q[(i, k)] * fl[k] * self.q[(j, k)])
                .sum()
        })
    }

    pub fn min_eigenvalue(&self) -> T {
        self.lambdas.last().copied().unwrap_or_else(T::zero)
    }

    pub fn max_eigenvalue(&self) -> T {
        self.lambdas.first().copied().unwrap_or_else(T::zero)
    }

    /// Number of eigenvalues strictly above `tol_rel · max|λ|`.
    pub fn rank_positive(&self, tol_rel: T) -> usize {
        let scale = self.lambdas.iter().fold(T::zero(), |m, &l| m.max(l.abs()));
        if scale == T::zero() {
            return 0;
        }
        self.lambdas
            .iter()
            .filter(|&&l| l > tol_rel * scale)
            .count()
    }
}

/// Symmetric eigendecomposition by Householder tridiagonalization followed by
/// implicit QL iterations.
pub fn eig<T: Real>(m: &SymMat<T>) -> Result<EigDecomp<T>, SymlinError> {
    let n = m.dim();
    let mut v = m.to_mat();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    if n == 0 {
        return Ok(EigDecomp { q: v, lambdas: d });
    }
    tridiagonalize(&mut v, &mut d, &mut e);
    ql_implicit(&mut v, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].partial_cmp(&d[a]).unwrap_or(std::cmp::Ordering::Equal));
    let lambdas = order.iter().map(|&k| d[k]).collect();
    let q = Mat::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(EigDecomp { q, lambdas })
}

/// Householder reduction to tridiagonal form, accumulating the transform in `v`.
fn tridiagonalize<T: Real>(v: &mut Mat<T>, d: &mut [T], e: &mut [T]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for &dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = T::zero();
                v[(j, i)] = T::zero();
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = T::zero();
            }
            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in j + 1..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = T::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    let val = v[(k, j)] - (f * e[k] + g * d[k]);
                    v[(k, j)] = val;
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = T::zero();
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    let val = v[(k, j)] - g * d[k];
                    v[(k, j)] = val;
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = T::zero();
    }
    v[(n - 1, n - 1)] = T::one();
    e[0] = T::zero();
}

/// Implicit QL iterations on the tridiagonal `(d, e)`, updating eigenvectors in `v`.
fn ql_implicit<T: Real>(v: &mut Mat<T>, d: &mut [T], e: &mut [T]) -> Result<(), SymlinError> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();

    let mut f = T::zero();
    let mut tst1 = T::zero();
    let eps = T::epsilon();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m == n {
            m = n - 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(SymlinError::ConvergenceFailure {
                        iterations: MAX_QL_ITERATIONS,
                    });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (T::c(2.0) * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let vk1 = v[(k, i + 1)];
                        let vk = v[(k, i)];
                        v[(k, i + 1)] = s * vk + c * vk1;
                        v[(k, i)] = c * vk - s * vk1;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
    Ok(())
}
