use super::mat::Mat;
use super::sym::SymMat;
use super::SymlinError;
use crate::scalar::Real;

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: Mat<T>,
    perm: Vec<usize>,
    min_pivot: T,
    max_pivot: T,
}

impl<T: Real> Lu<T> {
    pub fn factor(a: &Mat<T>) -> Result<Self, SymlinError> {
        if !a.is_square() {
            return Err(SymlinError::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut min_pivot = T::infinity();
        let mut max_pivot = T::zero();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -T::one()), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax == T::zero() || !pmax.is_finite() {
                return Err(SymlinError::Singular);
            }
            min_pivot = min_pivot.min(pmax);
            max_pivot = max_pivot.max(pmax);
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let tmp = lu[(p, j)];
                    lu[(p, j)] = lu[(k, j)];
                    lu[(k, j)] = tmp;
                }
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f != T::zero() {
                    for j in k + 1..n {
                        let v = lu[(i, j)] - f * lu[(k, j)];
                        lu[(i, j)] = v;
                    }
                }
            }
        }
        Ok(Self {
            lu,
            perm,
            min_pivot,
            max_pivot,
        })
    }

    /// Ratio of smallest to largest pivot magnitude: a cheap conditioning hint.
    pub fn pivot_ratio(&self) -> T {
        if self.max_pivot == T::zero() {
            T::zero()
        } else {
            self.min_pivot / self.max_pivot
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.perm.len();
        assert_eq!(b.len(), n);
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }
}

/// Lower-triangular Cholesky factor `L` with `M = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    pub l: Mat<T>,
}

pub fn cholesky<T: Real>(m: &SymMat<T>) -> Result<Cholesky<T>, SymlinError> {
    let n = m.dim();
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = m.get(j, j);
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > T::zero()) {
            return Err(SymlinError::NotPositiveDefinite);
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(Cholesky { l })
}

impl<T: Real> Cholesky<T> {
    /// `L⁻¹ B` for a matrix right-hand side.
    pub fn solve_lower_mat(&self, b: &Mat<T>) -> Mat<T> {
        let n = self.l.rows();
        let mut x = b.clone();
        for c in 0..b.cols() {
            for i in 0..n {
                let mut s = x[(i, c)];
                for k in 0..i {
                    s -= self.l[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s / self.l[(i, i)];
            }
        }
        x
    }

    /// `L⁻¹ S L⁻ᵀ` for a symmetric `S`.
    pub fn whiten(&self, s: &SymMat<T>) -> SymMat<T> {
        let y = self.solve_lower_mat(&s.to_mat());
        let w = self.solve_lower_mat(&y.transpose());
        SymMat::from_fn(s.dim(), |i, j| T::c(0.5) * (w[(i, j)] + w[(j, i)]))
    }
}
