use serde::{Deserialize, Serialize};

use super::mat::Mat;
use super::SymlinError;
use crate::scalar::Real;

/// `n(n+1)/2`, the dimension of the space of symmetric `n×n` matrices.
pub const fn tau(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Inverse of [`tau`]: the `n` with `tau(n) == len`, if any.
pub fn tau_inverse(len: usize) -> Option<usize> {
    let mut n = 0;
    while tau(n) < len {
        n += 1;
    }
    (tau(n) == len).then_some(n)
}

/// Dense real symmetric matrix.
///
/// Only the upper triangle is stored, so `m[(i, j)] == m[(j, i)]` holds
/// exactly for every instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMat<T> {
    n: usize,
    upper: Vec<T>,
}

impl<T: Real> SymMat<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            upper: vec![T::zero(); tau(n)],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![T::one(); n])
    }

    pub fn diag(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Builds from a generator evaluated on the upper triangle only.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut upper = Vec::with_capacity(tau(n));
        for i in 0..n {
            for j in i..n {
                upper.push(f(i, j));
            }
        }
        Self { n, upper }
    }

    /// Symmetric part `(M + Mᵀ)/2` of a square matrix.
    pub fn from_mat_symmetrized(m: &Mat<T>) -> Result<Self, SymlinError> {
        if !m.is_square() {
            return Err(SymlinError::NotSquare {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        let half = T::c(0.5);
        Ok(Self::from_fn(m.rows(), |i, j| {
            half * (m[(i, j)] + m[(j, i)])
        }))
    }

    /// Takes the upper triangle of a square matrix, checking symmetry up to `tol`.
    pub fn from_mat_checked(m: &Mat<T>, tol: T) -> Result<Self, SymlinError> {
        if !m.is_square() {
            return Err(SymlinError::NotSquare {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        let n = m.rows();
        for i in 0..n {
            for j in i + 1..n {
                if (m[(i, j)] - m[(j, i)]).abs() > tol {
                    return Err(SymlinError::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self::from_fn(n, |i, j| m[(i, j)]))
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self, SymlinError> {
        Self::from_mat_checked(&Mat::from_rows(rows), T::zero())
    }

    /// `(E_ij + E_ji)/2`, so that `⟨unit(i,j), X⟩ = X_ij`.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n);
        if i == j {
            m.set(i, i, T::one());
        } else {
            m.set(i, j, T::c(0.5));
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.upper[self.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let k = self.idx(i, j);
        self.upper[k] = v;
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        // Row i of the packed upper triangle starts at i(2n - i + 1)/2.
        i * (2 * self.n - i + 1) / 2 + (j - i)
    }

    /// Packed upper triangle, row-major (no √2 scaling).
    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn to_mat(&self) -> Mat<T> {
        Mat::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n);
        Self {
            n: self.n,
            upper: self
                .upper
                .iter()
                .zip(&rhs.upper)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n);
        Self {
            n: self.n,
            upper: self
                .upper
                .iter()
                .zip(&rhs.upper)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            n: self.n,
            upper: self.upper.iter().map(|&a| a * s).collect(),
        }
    }

    /// `self + s·rhs`.
    pub fn axpy(&self, s: T, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n);
        Self {
            n: self.n,
            upper: self
                .upper
                .iter()
                .zip(&rhs.upper)
                .map(|(&a, &b)| a + s * b)
                .collect(),
        }
    }

    pub fn add_identity(&self, s: T) -> Self {
        let mut m = self.clone();
        for i in 0..self.n {
            let v = m.get(i, i);
            m.set(i, i, v + s);
        }
        m
    }

    /// Frobenius inner product `⟨A, B⟩ = trace(AB)`.
    pub fn inner(&self, rhs: &Self) -> T {
        assert_eq!(self.n, rhs.n);
        let two = T::c(2.0);
        let mut s = T::zero();
        for i in 0..self.n {
            for j in i..self.n {
                let p = self.get(i, j) * rhs.get(i, j);
                s += if i == j { p } else { two * p };
            }
        }
        s
    }

    pub fn frobenius_norm(&self) -> T {
        self.inner(self).max(T::zero()).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.upper.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn trace(&self) -> T {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Symmetrized product `(AB + BA)/2`.
    pub fn jordan(&self, rhs: &Self) -> Self {
        let ab = self.to_mat().matmul(&rhs.to_mat());
        let half = T::c(0.5);
        Self::from_fn(self.n, |i, j| half * (ab[(i, j)] + ab[(j, i)]))
    }

    /// `M S Mᵀ` for a (possibly rectangular) `M`.
    pub fn congruence(&self, m: &Mat<T>) -> Self {
        assert_eq!(m.cols(), self.n);
        let ms = m.matmul(&self.to_mat());
        let out = ms.matmul(&m.transpose());
        Self::from_fn(m.rows(), |i, j| T::c(0.5) * (out[(i, j)] + out[(j, i)]))
    }

    pub fn is_finite(&self) -> bool {
        self.upper.iter().all(|x| x.is_finite())
    }

    /// Vectorization with off-diagonal entries scaled by √2, row-major upper triangle.
    pub fn svec(&self) -> SVec<T> {
        svec(self)
    }
}

/// Symmetric vectorization of an `n×n` symmetric matrix: length `n(n+1)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SVec<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> SVec<T> {
    pub fn new(data: Vec<T>) -> Result<Self, SymlinError> {
        let n =
            tau_inverse(data.len()).ok_or(SymlinError::LengthNotTriangular { len: data.len() })?;
        Ok(Self { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn dot(&self, rhs: &Self) -> T {
        super::mat::dot(&self.data, &rhs.data)
    }
}

/// `svec(M) = (M₁₁, √2 M₁₂, …, √2 M₁ₙ, M₂₂, √2 M₂₃, …, Mₙₙ)`.
pub fn svec<T: Real>(m: &SymMat<T>) -> SVec<T> {
    let r2 = T::SQRT_2();
    let n = m.dim();
    let mut data = Vec::with_capacity(tau(n));
    for i in 0..n {
        for j in i..n {
            let v = m.get(i, j);
            data.push(if i == j { v } else { r2 * v });
        }
    }
    SVec { n, data }
}

/// Inverse of [`svec`].
pub fn smat<T: Real>(v: &SVec<T>) -> SymMat<T> {
    let inv = T::one() / T::SQRT_2();
    let n = v.n;
    let mut k = 0;
    SymMat::from_fn(n, |i, j| {
        let x = v.data[k];
        k += 1;
        if i == j {
            x
        } else {
            x * inv
        }
    })
}

/// [`smat`] from a raw slice, checking the length is triangular.
pub fn smat_slice<T: Real>(v: &[T]) -> Result<SymMat<T>, SymlinError> {
    Ok(smat(&SVec::new(v.to_vec())?))
}
