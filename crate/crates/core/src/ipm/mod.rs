//! Primal-dual interior-point solver for one frozen instance.
//!
//! Infeasible-start Mehrotra predictor-corrector. The default search
//! direction symmetrizes complementarity as `½(XZ + ZX)` (AHO), so the Newton
//! matrix is exactly the KKT Jacobian analysed in [`crate::kkt`]. When that
//! linearization breaks down the solve restarts with the HKM scaling.

mod face;
mod newton;

pub use face::{
    face_extent, probe_directions, probe_range, solve_face_probe, solve_face_probe_eps,
    two_level_face_test, FaceMeasure, FaceTest, Sense, FACE_EPS_REL, FACE_TOL,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::symlin::{eig, norm2};
use crate::{ProblemInstance, SymMat};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const MAX_ITER: usize = 200;
pub const STEP_FRACTION: f64 = 0.98;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IpmError {
    #[error("numerical trouble: {0}")]
    NumericalTrouble(String),
    #[error("no convergence within {0} iterations")]
    MaxIter(usize),
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    NumericalTrouble,
}

/// Symmetrization used for the complementarity equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// `½(XZ + ZX) = μI`, Newton matrix equal to the KKT Jacobian.
    Aho,
    /// Scaling by `Z^{1/2}`; always well defined on the interior.
    Hkm,
}

/// Primal-dual triple at one time together with its residual diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualPoint {
    pub t: f64,
    pub x: SymMat,
    pub y: Vec<f64>,
    pub z: SymMat,
    /// `⟨X, Z⟩`.
    pub gap: f64,
    /// `‖𝒜[X] − b‖₂`.
    pub residual_primal: f64,
    /// `‖𝒜*[y] + Z − C‖_F`.
    pub residual_dual: f64,
}

impl PrimalDualPoint {
    pub fn evaluate(inst: &ProblemInstance, x: SymMat, y: Vec<f64>, z: SymMat) -> Self {
        let rp: Vec<f64> = inst
            .apply(&x)
            .iter()
            .zip(&inst.b)
            .map(|(a, b)| a - b)
            .collect();
        let rd = inst.adjoint(&y).add(&z).sub(&inst.c);
        Self {
            t: inst.t,
            gap: x.inner(&z),
            residual_primal: norm2(&rp),
            residual_dual: rd.frobenius_norm(),
            x,
            y,
            z,
        }
    }

    pub fn max_residual(&self) -> f64 {
        self.residual_primal.max(self.residual_dual)
    }

    /// Smallest eigenvalues of `X` and `Z`.
    pub fn min_eigenvalues(&self) -> (f64, f64) {
        let lx = eig(&self.x).map(|e| e.min_eigenvalue()).unwrap_or(f64::NAN);
        let lz = eig(&self.z).map(|e| e.min_eigenvalue()).unwrap_or(f64::NAN);
        (lx, lz)
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        let (lx, lz) = self.min_eigenvalues();
        lx >= -tol && lz >= -tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub point: PrimalDualPoint,
    /// `⟨C, X⟩`.
    pub p_star: f64,
    /// `bᵀy`.
    pub d_star: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub direction: Direction,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn into_optimal(self) -> Result<Self, IpmError> {
        match self.status {
            SolveStatus::Optimal => Ok(self),
            SolveStatus::MaxIter => Err(IpmError::MaxIter(self.iterations)),
            SolveStatus::NumericalTrouble => Err(IpmError::NumericalTrouble(format!(
                "stalled at t = {} with residuals {:.1e}/{:.1e}, gap {:.1e}",
                self.point.t, self.point.residual_primal, self.point.residual_dual, self.point.gap
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IpmOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub step_fraction: f64,
    /// Extra iterations spent pushing past `tol` while progress continues.
    pub polish_iters: usize,
    /// Identity shift applied to warm-start matrices to re-enter the interior.
    pub warm_shift: f64,
}

impl Default for IpmOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: MAX_ITER,
            step_fraction: STEP_FRACTION,
            polish_iters: 6,
            warm_shift: 1e-3,
        }
    }
}

/// Solves one instance, optionally warm-started from a nearby point.
pub fn solve(
    inst: &ProblemInstance,
    warm: Option<&PrimalDualPoint>,
) -> Result<SolveResult, IpmError> {
    solve_with(inst, warm, &IpmOptions::default())
}

pub fn solve_with(
    inst: &ProblemInstance,
    warm: Option<&PrimalDualPoint>,
    opts: &IpmOptions,
) -> Result<SolveResult, IpmError> {
    let (n, m) = (inst.n(), inst.m());
    if let Some(w) = warm {
        if w.x.dim() != n || w.z.dim() != n || w.y.len() != m {
            return Err(IpmError::DimensionMismatch(format!(
                "warm start has n = {}, m = {}; instance has n = {n}, m = {m}",
                w.x.dim(),
                w.y.len()
            )));
        }
    }
    let mut attempts: Vec<(newton::Iterate, Direction)> = Vec::new();
    if let Some(w) = warm {
        if w.x.is_finite() && w.z.is_finite() && w.y.iter().all(|v| v.is_finite()) {
            attempts.push((newton::Iterate::warm(w, opts.warm_shift), Direction::Aho));
        }
    }
    attempts.push((newton::Iterate::cold(inst), Direction::Aho));
    attempts.push((newton::Iterate::cold(inst), Direction::Hkm));

    let mut fallback: Option<SolveResult> = None;
    let mut total = 0;
    for (start, dir) in attempts {
        let mut res = newton::run(inst, start, dir, opts);
        total += res.iterations;
        res.iterations = total;
        if res.is_optimal() {
            return Ok(res);
        }
        let better = match &fallback {
            None => true,
            Some(f) => {
                res.point.max_residual().max(res.point.gap.abs())
                    < f.point.max_residual().max(f.point.gap.abs())
            }
        };
        if better {
            fallback = Some(res);
        } else if let Some(f) = fallback.as_mut() {
            f.iterations = total;
        }
    }
    Ok(fallback.expect("at least one attempt ran"))
}

#[cfg(test)]
mod tests;
