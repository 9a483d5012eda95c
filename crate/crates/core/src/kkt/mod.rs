//! Optimality system of a frozen instance in vectorized form.
//!
//! ```text
//!            ⎛ Ã svec(X) − b              ⎞
//! F(X,y,Z) = ⎜ Ãᵀy + svec(Z) − svec(C)    ⎟
//!            ⎝ ½ svec(XZ + ZX)            ⎠
//! ```
//!
//! with unknowns ordered `w = (svec X, y, svec Z)` and Jacobian
//!
//! ```text
//!       ⎡ Ã       0    0       ⎤
//! J_F = ⎢ 0       Ãᵀ   I       ⎥
//!       ⎣ Z ⊗ₛ I  0    I ⊗ₛ X  ⎦
//! ```

mod certify;
mod enumerate;

pub use certify::{certify, RegularityCertificate, NEAR_OPTIMAL_RESIDUAL};
pub use enumerate::{enumerate_kkt, EnumerationReport, KktRoot};

use thiserror::Error;

use crate::ipm::PrimalDualPoint;
use crate::symlin::{norm2, skron, smat_slice, svd, svec, tau};
use crate::Mat;
use crate::{ProblemInstance, SymMat};

/// `σ_min ≥ NONSINGULAR_REL · σ_max` counts as an invertible Jacobian.
pub const NONSINGULAR_REL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KktError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("point is not near-optimal (KKT residual {residual:.3e})")]
    NotNearOptimal { residual: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KktResidual {
    pub r_primal: Vec<f64>,
    pub r_dual: Vec<f64>,
    pub r_comp: Vec<f64>,
}

impl KktResidual {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.r_primal.clone();
        v.extend_from_slice(&self.r_dual);
        v.extend_from_slice(&self.r_comp);
        v
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.to_vec())
    }

    pub fn max_block_norm(&self) -> f64 {
        norm2(&self.r_primal)
            .max(norm2(&self.r_dual))
            .max(norm2(&self.r_comp))
    }
}

fn check_dims(inst: &ProblemInstance, x: &SymMat, y: &[f64], z: &SymMat) -> Result<(), KktError> {
    let (n, m) = (inst.n(), inst.m());
    if x.dim() != n || z.dim() != n || y.len() != m {
        return Err(KktError::DimensionMismatch(format!(
            "point has dim(X) = {}, dim(Z) = {}, len(y) = {}; instance has n = {n}, m = {m}",
            x.dim(),
            z.dim(),
            y.len()
        )));
    }
    Ok(())
}

/// `F` at an arbitrary triple (not necessarily PSD).
pub fn residual_parts(
    inst: &ProblemInstance,
    x: &SymMat,
    y: &[f64],
    z: &SymMat,
) -> Result<KktResidual, KktError> {
    check_dims(inst, x, y, z)?;
    let sx = svec(x).into_vec();
    let r_primal = inst
        .atilde
        .matvec(&sx)
        .iter()
        .zip(&inst.b)
        .map(|(a, b)| a - b)
        .collect();
    let aty = inst.atilde.tr_matvec(y);
    let r_dual = aty
        .iter()
        .zip(svec(z).as_slice())
        .zip(svec(&inst.c).as_slice())
        .map(|((a, z), c)| a + z - c)
        .collect();
    let r_comp = svec(&x.jordan(z)).into_vec();
    Ok(KktResidual {
        r_primal,
        r_dual,
        r_comp,
    })
}

pub fn residual(inst: &ProblemInstance, pt: &PrimalDualPoint) -> Result<KktResidual, KktError> {
    residual_parts(inst, &pt.x, &pt.y, &pt.z)
}

/// Stacked unknown vector `(svec X, y, svec Z)`.
pub fn pack(x: &SymMat, y: &[f64], z: &SymMat) -> Vec<f64> {
    let mut w = svec(x).into_vec();
    w.extend_from_slice(y);
    w.extend(svec(z).into_vec());
    w
}

/// Inverse of [`pack`] for an instance of size `(n, m)`.
pub fn unpack(w: &[f64], n: usize, m: usize) -> Result<(SymMat, Vec<f64>, SymMat), KktError> {
    let tn = tau(n);
    if w.len() != 2 * tn + m {
        return Err(KktError::DimensionMismatch(format!(
            "vector of length {} for n = {n}, m = {m}",
            w.len()
        )));
    }
    let bad = |e: crate::symlin::SymlinError| KktError::Numerical(e.to_string());
    Ok((
        smat_slice(&w[..tn]).map_err(bad)?,
        w[tn..tn + m].to_vec(),
        smat_slice(&w[tn + m..]).map_err(bad)?,
    ))
}

/// `J_F` at `(X, Z)`; it does not depend on `y`.
pub fn jacobian_matrix(inst: &ProblemInstance, x: &SymMat, z: &SymMat) -> Result<Mat, KktError> {
    let n = inst.n();
    if x.dim() != n || z.dim() != n {
        return Err(KktError::DimensionMismatch(format!(
            "dim(X) = {}, dim(Z) = {}, n = {n}",
            x.dim(),
            z.dim()
        )));
    }
    let m = inst.m();
    let tn = tau(n);
    let eye = SymMat::identity(n);
    let bad = |e: crate::symlin::SymlinError| KktError::Numerical(e.to_string());
    let mut j = Mat::zeros(m + 2 * tn, m + 2 * tn);
    j.set_block(0, 0, &inst.atilde);
    j.set_block(m, tn, &inst.atilde.transpose());
    j.set_block(m, tn + m, &Mat::identity(tn));
    j.set_block(m + tn, 0, &skron(z, &eye).map_err(bad)?);
    j.set_block(m + tn, tn + m, &skron(&eye, x).map_err(bad)?);
    Ok(j)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KktJacobian {
    pub j: Mat,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl KktJacobian {
    pub fn sigma_min_rel(&self) -> f64 {
        if self.sigma_max > 0.0 {
            self.sigma_min / self.sigma_max
        } else {
            0.0
        }
    }

    pub fn is_nonsingular(&self) -> bool {
        self.sigma_min >= NONSINGULAR_REL * self.sigma_max
    }
}

pub fn jacobian_parts(inst: &ProblemInstance, x: &SymMat, z: &SymMat) -> Result<KktJacobian, KktError> {
    let j = jacobian_matrix(inst, x, z)?;
    let s = svd(&j).map_err(|e| KktError::Numerical(e.to_string()))?;
    Ok(KktJacobian {
        sigma_min: s.sigma_min(),
        sigma_max: s.sigma_max(),
        j,
    })
}

pub fn jacobian(inst: &ProblemInstance, pt: &PrimalDualPoint) -> Result<KktJacobian, KktError> {
    check_dims(inst, &pt.x, &pt.y, &pt.z)?;
    jacobian_parts(inst, &pt.x, &pt.z)
}

/// `∂F/∂t = (Ȧ svec X − ḃ, Ȧᵀy − svec Ċ, 0)` where `rates` holds the
/// time derivatives of the data.
pub fn time_derivative(rates: &ProblemInstance, x: &SymMat, y: &[f64]) -> Result<Vec<f64>, KktError> {
    let n = rates.n();
    if x.dim() != n || y.len() != rates.m() {
        return Err(KktError::DimensionMismatch(format!(
            "dim(X) = {}, len(y) = {}; data has n = {n}, m = {}",
            x.dim(),
            y.len(),
            rates.m()
        )));
    }
    let mut out: Vec<f64> = rates
        .atilde
        .matvec(&svec(x).into_vec())
        .iter()
        .zip(&rates.b)
        .map(|(a, b)| a - b)
        .collect();
    let aty = rates.atilde.tr_matvec(y);
    out.extend(aty.iter().zip(svec(&rates.c).as_slice()).map(|(a, c)| a - c));
    out.extend(std::iter::repeat(0.0).take(tau(n)));
    Ok(out)
}
