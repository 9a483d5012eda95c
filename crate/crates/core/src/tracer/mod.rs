//! Predictor-corrector continuation of the optimal trajectory.
//!
//! Where the KKT Jacobian is invertible the trajectory is followed with an
//! Euler predictor `w + dt·ẇ`, `J_F ẇ = −∂F/∂t`, and a Newton corrector.
//! Elsewhere each step is a fresh interior-point solve. Steps are accepted
//! only if the new sample is consistent with a local extrapolation of the
//! previous ones; rejected steps are halved down to the event resolution, and
//! whatever still does not fit there is bracketed as an [`Event`].

mod detect;
mod trace;

pub use trace::{trace, Event, EventKind, TraceFailure, TraceOptions, TraceReport};

use thiserror::Error;

use crate::ipm::{face_extent, solve, FaceMeasure, IpmError, PrimalDualPoint, SolveResult};
use crate::kkt::{
    certify, jacobian_matrix, pack, residual_parts, time_derivative, unpack, KktError,
    RegularityCertificate,
};
use crate::model::ModelError;
use crate::symlin::{eig, Lu};
use crate::{ProblemInstance, SymMat, TvSdpProblem};

/// Relative Jacobian singular value below which a dip is reported.
pub const DIP_SIGMA: f64 = 1e-6;
/// Relative size of a derivative jump, `‖Δ dX‖ > JUMP_REL·(1 + ‖dX‖)`.
pub const JUMP_REL: f64 = 1e-3;
/// Offset used for one-sided derivatives.
pub const DERIV_DELTA: f64 = 1e-4;
/// Agreement required between the Jacobian and finite-difference estimates.
pub const ESTIMATOR_TOL: f64 = 1e-4;
/// Rank tolerance of the certificates attached to samples.
pub const CERT_TOL: f64 = 1e-7;
/// Residual at which the Newton corrector stops.
pub const CORRECT_TOL: f64 = 1e-9;
const MAX_CORRECT: usize = 10;
const PSD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("KKT Jacobian is singular at t = {t} (σ_min/σ_max = {sigma_min_rel:.2e})")]
    SingularJacobian { t: f64, sigma_min_rel: f64 },
    #[error("Newton correction at t = {t} failed after {iterations} steps (residual {residual:.2e})")]
    CorrectionDiverged {
        t: f64,
        iterations: usize,
        residual: f64,
    },
    #[error("optimal set is not single-valued at t = {t}")]
    NotSingleValued { t: f64 },
    #[error("solver failure at t = {t}: {reason}")]
    SolverFailure { t: f64, reason: String },
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Kkt(#[from] KktError),
}

fn solver_failure(t: f64, e: IpmError) -> TraceError {
    TraceError::SolverFailure {
        t,
        reason: e.to_string(),
    }
}

/// One point of the traced trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub point: PrimalDualPoint,
    pub p_star: f64,
    pub d_star: f64,
    pub certificate: RegularityCertificate,
    /// Present whenever the Jacobian is invertible and the data are
    /// differentiable at `t`.
    pub dxdt: Option<SymMat>,
    /// Full `ẇ = (svec Ẋ, ẏ, svec Ż)`.
    pub dwdt: Option<Vec<f64>>,
    pub face: Option<FaceMeasure>,
    /// Algebraic extent of the primal optimal face.
    pub multiplicity_range: Option<f64>,
}

impl TrajectorySample {
    pub fn sigma_min_rel(&self) -> f64 {
        self.certificate.sigma_min_rel
    }

    pub fn is_multi(&self) -> bool {
        self.face.as_ref().is_some_and(|f| f.is_multi())
    }

    pub fn extent(&self) -> f64 {
        self.multiplicity_range.unwrap_or(0.0)
    }
}

/// `ẇ` from `J_F ẇ = −∂F/∂t`.
fn trajectory_rate(
    p: &TvSdpProblem,
    inst: &ProblemInstance,
    pt: &PrimalDualPoint,
) -> Result<Vec<f64>, TraceError> {
    let rates = p.instantiate_derivative(inst.t)?;
    let dfdt = time_derivative(&rates, &pt.x, &pt.y)?;
    let j = jacobian_matrix(inst, &pt.x, &pt.z)?;
    let lu = Lu::factor(&j).map_err(|e| KktError::Numerical(e.to_string()))?;
    let neg: Vec<f64> = dfdt.iter().map(|v| -v).collect();
    let w = lu.solve(&neg);
    if w.iter().any(|v| !v.is_finite()) {
        return Err(TraceError::SingularJacobian {
            t: inst.t,
            sigma_min_rel: 0.0,
        });
    }
    Ok(w)
}

fn rate_to_dx(w: &[f64], n: usize, m: usize) -> Result<SymMat, TraceError> {
    Ok(unpack(w, n, m)?.0)
}

/// Certificate, derivative and face measurement at an optimal point.
pub(crate) fn evaluate_sample(
    p: &TvSdpProblem,
    inst: &ProblemInstance,
    point: PrimalDualPoint,
) -> Result<TrajectorySample, TraceError> {
    let certificate = certify(inst, &point, CERT_TOL)?;
    let dwdt = if certificate.jacobian_nonsingular {
        trajectory_rate(p, inst, &point).ok()
    } else {
        None
    };
    let dxdt = match &dwdt {
        Some(w) => Some(rate_to_dx(w, inst.n(), inst.m())?),
        None => None,
    };
    let face = face_extent(inst, &point.x).ok();
    let p_star = inst.c.inner(&point.x);
    let d_star = inst.b.iter().zip(&point.y).map(|(b, y)| b * y).sum();
    Ok(TrajectorySample {
        t: inst.t,
        multiplicity_range: face.as_ref().map(|f| f.extent),
        point,
        p_star,
        d_star,
        certificate,
        dxdt,
        dwdt,
        face,
    })
}

pub(crate) fn solve_optimal(
    inst: &ProblemInstance,
    warm: Option<&PrimalDualPoint>,
) -> Result<SolveResult, TraceError> {
    solve(inst, warm)
        .and_then(SolveResult::into_optimal)
        .map_err(|e| solver_failure(inst.t, e))
}

/// Cold interior-point solve at `t` followed by [`evaluate_sample`].
pub fn sample_at(p: &TvSdpProblem, t: f64) -> Result<TrajectorySample, TraceError> {
    let inst = p.instantiate(t)?;
    let res = solve_optimal(&inst, None)?;
    evaluate_sample(p, &inst, res.point)
}

/// Euler step `w + dt·ẇ` evaluated against the data of `inst_next`.
pub fn predict(
    sample: &TrajectorySample,
    inst_next: &ProblemInstance,
    dt: f64,
) -> Result<PrimalDualPoint, TraceError> {
    let singular = || TraceError::SingularJacobian {
        t: sample.t,
        sigma_min_rel: sample.sigma_min_rel(),
    };
    if !sample.certificate.jacobian_nonsingular {
        return Err(singular());
    }
    let rate = sample.dwdt.as_ref().ok_or_else(singular)?;
    let w = pack(&sample.point.x, &sample.point.y, &sample.point.z);
    let next: Vec<f64> = w.iter().zip(rate).map(|(a, b)| a + dt * b).collect();
    let (x, y, z) = unpack(&next, inst_next.n(), inst_next.m())?;
    Ok(PrimalDualPoint::evaluate(inst_next, x, y, z))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corrected {
    pub point: PrimalDualPoint,
    pub iterations: usize,
}

/// Plain Newton iteration on `F = 0` from `guess`. The result must reach
/// `‖F‖ ≤ 1e-9` with `X, Z ⪰ −1e-8 I`; anything else is reported as
/// [`TraceError::CorrectionDiverged`] and left to the caller's fallback.
pub fn correct(inst: &ProblemInstance, guess: &PrimalDualPoint) -> Result<Corrected, TraceError> {
    let (n, m) = (inst.n(), inst.m());
    let mut w = pack(&guess.x, &guess.y, &guess.z);
    let f_at = |w: &[f64]| -> Result<(Vec<f64>, f64), TraceError> {
        let (x, y, z) = unpack(w, n, m)?;
        let r = residual_parts(inst, &x, &y, &z)?;
        let norm = r.max_block_norm();
        Ok((r.to_vec(), norm))
    };
    let (mut f, mut norm) = f_at(&w)?;
    let start = norm;
    let diverged = |iterations, residual| TraceError::CorrectionDiverged {
        t: inst.t,
        iterations,
        residual,
    };
    let mut iterations = 0;
    while norm > CORRECT_TOL {
        if iterations == MAX_CORRECT || !norm.is_finite() || norm > 1e3 * (1.0 + start) {
            return Err(diverged(iterations, norm));
        }
        let (x, _, z) = unpack(&w, n, m)?;
        let j = jacobian_matrix(inst, &x, &z)?;
        let lu = Lu::factor(&j).map_err(|_| diverged(iterations, norm))?;
        let neg: Vec<f64> = f.iter().map(|v| -v).collect();
        let d = lu.solve(&neg);
        for (wi, di) in w.iter_mut().zip(&d) {
            *wi += di;
        }
        (f, norm) = f_at(&w)?;
        iterations += 1;
    }
    let (x, y, z) = unpack(&w, n, m)?;
    let min_eig = |s: &SymMat| eig(s).map(|e| e.min_eigenvalue()).unwrap_or(f64::NAN);
    if !(min_eig(&x) >= -PSD_TOL && min_eig(&z) >= -PSD_TOL) {
        return Err(diverged(iterations, norm));
    }
    Ok(Corrected {
        point: PrimalDualPoint::evaluate(inst, x, y, z),
        iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub(crate) fn sign(self) -> f64 {
        match self {
            Side::Left => -1.0,
            Side::Right => 1.0,
        }
    }
}

/// Both one-sided derivative estimates at `t* ± δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeEstimates {
    /// From the Jacobian solve, when the Jacobian is invertible there.
    pub jacobian: Option<SymMat>,
    /// Second-order one-sided difference on `t* ± δ`, `t* ± 2δ`, `t* ± 3δ`.
    pub finite_difference: Option<SymMat>,
}

impl DerivativeEstimates {
    pub fn preferred(&self) -> Option<&SymMat> {
        self.jacobian.as_ref().or(self.finite_difference.as_ref())
    }

    /// `‖J-estimate − FD-estimate‖_F`, when both exist.
    pub fn disagreement(&self) -> Option<f64> {
        match (&self.jacobian, &self.finite_difference) {
            (Some(a), Some(b)) => Some(a.sub(b).frobenius_norm()),
            _ => None,
        }
    }
}

pub fn one_sided_estimates(
    p: &TvSdpProblem,
    t_star: f64,
    side: Side,
    delta: f64,
) -> Result<DerivativeEstimates, TraceError> {
    let t1 = t_star + side.sign() * delta;
    one_sided_estimates_from(p, t_star, side, delta)?
        .1
        .ok_or(TraceError::NotSingleValued { t: t1 })
}

/// The sample at `t* ± δ`, the estimates when that side is single-valued,
/// and the number of solves spent.
pub(crate) fn one_sided_estimates_from(
    p: &TvSdpProblem,
    t_star: f64,
    side: Side,
    delta: f64,
) -> Result<(TrajectorySample, Option<DerivativeEstimates>, usize), TraceError> {
    let s = side.sign();
    let first = sample_at(p, t_star + s * delta)?;
    if first.is_multi() {
        return Ok((first, None, 1));
    }
    let jacobian = first.dxdt.clone();
    let further: Result<Vec<TrajectorySample>, TraceError> =
        [2.0, 3.0].iter().map(|k| sample_at(p, t_star + s * k * delta)).collect();
    // Near the horizon end the outer stencil may be unavailable.
    let finite_difference = match further {
        Ok(f) if f.iter().all(|x| !x.is_multi()) => {
            let (x1, x2, x3) = (&first.point.x, &f[0].point.x, &f[1].point.x);
            // d/dt at t* ± δ, stencil pointing away from t*.
            Some(x1.scale(-3.0).axpy(4.0, x2).axpy(-1.0, x3).scale(s / (2.0 * delta)))
        }
        _ => None,
    };
    let est = (jacobian.is_some() || finite_difference.is_some()).then_some(DerivativeEstimates {
        jacobian,
        finite_difference,
    });
    Ok((first, est, 3))
}

/// One-sided derivative of the primal trajectory at `t*`, taken at
/// `t* ± delta`. The Jacobian solve is used when available, the
/// finite-difference stencil otherwise.
pub fn one_sided_derivative(
    p: &TvSdpProblem,
    t_star: f64,
    side: Side,
    delta: f64,
) -> Result<SymMat, TraceError> {
    let est = one_sided_estimates(p, t_star, side, delta)?;
    Ok(est.preferred().cloned().expect("at least one estimate"))
}

#[cfg(test)]
mod tests;
