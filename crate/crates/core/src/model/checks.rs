//! Runnable versions of the standing assumptions: linear independence of the
//! constraints, strict primal and dual feasibility, and continuity of the data.

use super::{ModelError, ProblemInstance, TvSdpProblem};
use crate::ipm;
use crate::symlin::{numerical_rank, smat_slice, svd, Mat, SymMat};

/// Relative singular value cut for the constraint rank.
pub const LICQ_RANK_TOL: f64 = 1e-10;
/// Margins above this count as strictly feasible.
pub const STRICT_MARGIN_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct LicqReport {
    pub rank: usize,
    pub m: usize,
    pub satisfied: bool,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

pub fn check_licq(inst: &ProblemInstance<f64>) -> LicqReport {
    let m = inst.m();
    if m == 0 {
        return LicqReport {
            rank: 0,
            m,
            satisfied: true,
            sigma_min: 0.0,
            sigma_max: 0.0,
        };
    }
    let rank = numerical_rank(&inst.atilde, LICQ_RANK_TOL);
    let (sigma_min, sigma_max) = match svd(&inst.atilde.transpose()) {
        Ok(s) => (s.sigma_min(), s.sigma_max()),
        Err(_) => (f64::NAN, f64::NAN),
    };
    LicqReport {
        rank,
        m,
        satisfied: rank == m,
        sigma_min,
        sigma_max,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityMargins {
    /// `max λ` with `𝒜[X] = b`, `X − λI ⪰ 0`, `tr X ≤ R`, `λ ≥ 0`.
    pub primal_margin: f64,
    /// The same quantity for the dual slack `Z = C − 𝒜*[y]`.
    pub dual_margin: f64,
    /// Trace bound `R` of the primal margin problem.
    pub trace_cap: f64,
    /// Trace bound of the dual margin problem.
    pub dual_trace_cap: f64,
}

impl FeasibilityMargins {
    pub fn strictly_feasible(&self) -> bool {
        self.primal_margin > STRICT_MARGIN_TOL && self.dual_margin > STRICT_MARGIN_TOL
    }
}

fn trace_cap(n: usize, b: &[f64]) -> f64 {
    10.0 * n as f64 * (1.0 + b.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// Largest `λ ≥ 0` with `X − λI ⪰ 0` over `{X ⪰ 0 : ⟨A_i, X⟩ = b_i, tr X ≤ R}`.
///
/// Solved as one SDP in `diag(W, λ, ν)` with `X = W + λI` and `ν` the trace
/// slack; the off-diagonal blocks are pinned to zero.
fn margin(t: f64, n: usize, a: &[SymMat<f64>], b: &[f64]) -> Result<(f64, f64), ModelError> {
    let big = n + 2;
    let (lam, nu) = (n, n + 1);
    let r = trace_cap(n, b);
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (ai, &bi) in a.iter().zip(b) {
        let mut m = SymMat::from_fn(big, |i, j| if i < n && j < n { ai.get(i, j) } else { 0.0 });
        m.set(lam, lam, ai.trace());
        rows.push(m);
        rhs.push(bi);
    }
    let mut tr = SymMat::zeros(big);
    for i in 0..n {
        tr.set(i, i, 1.0);
    }
    tr.set(lam, lam, n as f64);
    tr.set(nu, nu, 1.0);
    rows.push(tr);
    rhs.push(r);
    for i in 0..n {
        for j in [lam, nu] {
            rows.push(SymMat::unit(big, i, j));
            rhs.push(0.0);
        }
    }
    rows.push(SymMat::unit(big, lam, nu));
    rhs.push(0.0);
    let mut c = SymMat::zeros(big);
    c.set(lam, lam, -1.0);
    let inst = ProblemInstance::new(t, rows, rhs, c);
    let res = ipm::solve(&inst, None).map_err(|e| ModelError::SolverFailure(e.to_string()))?;
    let res = res
        .into_optimal()
        .map_err(|e| ModelError::SolverFailure(format!("margin problem at t = {t}: {e}")))?;
    Ok((res.point.x.get(lam, lam).max(0.0), r))
}

/// Orthonormal basis of the orthogonal complement of `span{A_i}` in `𝕊^n`.
fn complement_basis(inst: &ProblemInstance<f64>) -> Result<Vec<SymMat<f64>>, ModelError> {
    let n = inst.n();
    let tn = crate::symlin::tau(n);
    let null = if inst.m() == 0 {
        Mat::identity(tn)
    } else {
        svd(&inst.atilde)
            .map_err(|e| ModelError::SolverFailure(e.to_string()))?
            .null_space(LICQ_RANK_TOL)
    };
    (0..null.cols())
        .map(|k| smat_slice(&null.column(k)).map_err(|e| ModelError::SolverFailure(e.to_string())))
        .collect()
}

pub fn check_strict_feasibility(
    inst: &ProblemInstance<f64>,
) -> Result<FeasibilityMargins, ModelError> {
    let n = inst.n();
    let (primal_margin, trace_cap) = margin(inst.t, n, &inst.a, &inst.b)?;
    // Z ∈ C + span{A_i}  ⇔  ⟨N_k, Z⟩ = ⟨N_k, C⟩ for a basis N_k of the complement.
    let basis = complement_basis(inst)?;
    let rhs: Vec<f64> = basis.iter().map(|nk| nk.inner(&inst.c)).collect();
    let (dual_margin, dual_trace_cap) = margin(inst.t, n, &basis, &rhs)?;
    Ok(FeasibilityMargins {
        primal_margin,
        dual_margin,
        trace_cap,
        dual_trace_cap,
    })
}

/// LICQ over a grid of times, with the spread of `σ(Ã(t))`.
///
/// Uniform boundedness of `Ã(t)` and its pseudo-inverse cannot be certified
/// from samples; the σ-range is reported instead.
#[derive(Debug, Clone, PartialEq)]
pub struct LicqSweep {
    pub times: Vec<f64>,
    pub failures: Vec<f64>,
    pub min_rank: usize,
    pub sigma_min_range: (f64, f64),
    pub sigma_max_range: (f64, f64),
}

impl LicqSweep {
    pub fn satisfied(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilitySample {
    pub t: f64,
    pub margins: Result<FeasibilityMargins, String>,
}

impl FeasibilitySample {
    pub fn strictly_feasible(&self) -> bool {
        matches!(&self.margins, Ok(m) if m.strictly_feasible())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityFinding {
    pub location: String,
    pub at: f64,
    pub left: f64,
    pub right: f64,
    pub continuous: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub licq: LicqSweep,
    pub feasibility: Vec<FeasibilitySample>,
    pub continuity: Vec<ContinuityFinding>,
}

impl AssumptionReport {
    pub fn licq_ok(&self) -> bool {
        self.licq.satisfied()
    }

    pub fn feasibility_ok(&self) -> bool {
        self.feasibility
            .iter()
            .all(FeasibilitySample::strictly_feasible)
    }

    pub fn continuity_ok(&self) -> bool {
        self.continuity.iter().all(|c| c.continuous)
    }

    pub fn all_ok(&self) -> bool {
        self.licq_ok() && self.feasibility_ok() && self.continuity_ok()
    }
}

/// `count` equally spaced interior points of the open interval `(lo, hi)`.
pub fn interior_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (1..=count)
        .map(|k| lo + (hi - lo) * k as f64 / (count + 1) as f64)
        .collect()
}

/// All three assumption checks on `grid` interior times of the horizon.
pub fn check_assumptions(p: &TvSdpProblem, grid: usize) -> Result<AssumptionReport, ModelError> {
    let (lo, hi) = p.horizon();
    let times = interior_grid(lo, hi, grid);
    let mut failures = Vec::new();
    let mut min_rank = usize::MAX;
    let mut smin = (f64::INFINITY, f64::NEG_INFINITY);
    let mut smax = (f64::INFINITY, f64::NEG_INFINITY);
    let mut feasibility = Vec::new();
    for &t in &times {
        let inst = p.instantiate(t)?;
        let l = check_licq(&inst);
        min_rank = min_rank.min(l.rank);
        smin = (smin.0.min(l.sigma_min), smin.1.max(l.sigma_min));
        smax = (smax.0.min(l.sigma_max), smax.1.max(l.sigma_max));
        if !l.satisfied {
            failures.push(t);
        }
        feasibility.push(FeasibilitySample {
            t,
            margins: check_strict_feasibility(&inst).map_err(|e| e.to_string()),
        });
    }
    let continuity = p
        .continuity_audit()
        .into_iter()
        .map(|(location, a)| ContinuityFinding {
            location,
            at: a.at,
            left: a.left,
            right: a.right,
            continuous: a.continuous,
        })
        .collect();
    Ok(AssumptionReport {
        licq: LicqSweep {
            times,
            failures,
            min_rank: if min_rank == usize::MAX { 0 } else { min_rank },
            sigma_min_range: smin,
            sigma_max_range: smax,
        },
        feasibility,
        continuity,
    })
}
