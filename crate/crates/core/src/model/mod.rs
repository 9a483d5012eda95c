//! Time-varying SDP data in standard primal form.
//!
//! ```text
//! min ⟨C(t), X⟩  s.t.  ⟨A_i(t), X⟩ = b_i(t), i = 1..m,  X ⪰ 0
//! ```

mod checks;
mod examples;

pub use checks::{
    check_assumptions, check_licq, check_strict_feasibility, interior_grid, AssumptionReport,
    ContinuityFinding, FeasibilityMargins, FeasibilitySample, LicqReport, LicqSweep, LICQ_RANK_TOL,
    STRICT_MARGIN_TOL,
};
pub use examples::{builtin, builtin_names};

use std::sync::OnceLock;

use thiserror::Error;

use crate::scalar::Real;
use crate::symlin::{svec, tau, Mat, SymMat};
use crate::timefn::{BreakpointAudit, TimeExpr, TimeFnError, TimeMat};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("data undefined at t = {t}: {reason}")]
    DomainError { t: f64, reason: String },
    #[error("unknown example {0:?}")]
    UnknownExample(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("solver failure: {0}")]
    SolverFailure(String),
}

impl ModelError {
    fn from_timefn(t: f64, e: TimeFnError) -> Self {
        ModelError::DomainError {
            t,
            reason: e.to_string(),
        }
    }
}

/// Time-varying SDP over the open horizon `(t_i, t_f)`.
#[derive(Debug, Clone)]
pub struct TvSdpProblem {
    pub name: String,
    n: usize,
    a: Vec<TimeMat>,
    b: Vec<TimeExpr>,
    c: TimeMat,
    horizon: (f64, f64),
    pub notes: Option<String>,
    derivative: OnceLock<Box<DataDerivative>>,
}

/// Symbolic time derivatives of all problem data.
#[derive(Debug, Clone)]
pub struct DataDerivative {
    pub a: Vec<TimeMat>,
    pub b: Vec<TimeExpr>,
    pub c: TimeMat,
}

impl TvSdpProblem {
    pub fn new(
        name: impl Into<String>,
        a: Vec<TimeMat>,
        b: Vec<TimeExpr>,
        c: TimeMat,
        horizon: (f64, f64),
    ) -> Result<Self, ModelError> {
        let n = c.dim();
        if n == 0 {
            return Err(ModelError::InvalidProblem(
                "matrix dimension must be positive".into(),
            ));
        }
        if a.len() != b.len() {
            return Err(ModelError::InvalidProblem(format!(
                "{} constraint matrices but {} right-hand sides",
                a.len(),
                b.len()
            )));
        }
        if let Some(k) = a.iter().position(|ai| ai.dim() != n) {
            return Err(ModelError::InvalidProblem(format!(
                "constraint matrix {} has dimension {}, expected {n}",
                k + 1,
                a[k].dim()
            )));
        }
        if a.len() > tau(n) {
            return Err(ModelError::InvalidProblem(format!(
                "{} constraints exceed n(n+1)/2 = {}",
                a.len(),
                tau(n)
            )));
        }
        if !(horizon.0 < horizon.1) {
            return Err(ModelError::InvalidProblem(format!(
                "horizon ({}, {}) is empty",
                horizon.0, horizon.1
            )));
        }
        Ok(Self {
            name: name.into(),
            n,
            a,
            b,
            c,
            horizon,
            notes: None,
            derivative: OnceLock::new(),
        })
    }

    pub fn with_notes(mut self, notes: impl Into<String>) -> Self {
        self.notes = Some(notes.into());
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.a.len()
    }

    pub fn horizon(&self) -> (f64, f64) {
        self.horizon
    }

    pub fn constraint_matrices(&self) -> &[TimeMat] {
        &self.a
    }

    pub fn rhs(&self) -> &[TimeExpr] {
        &self.b
    }

    pub fn objective(&self) -> &TimeMat {
        &self.c
    }

    pub fn in_horizon(&self, t: f64) -> bool {
        t > self.horizon.0 && t < self.horizon.1
    }

    /// Evaluates all data at `t`, which must lie inside the open horizon.
    pub fn instantiate(&self, t: f64) -> Result<ProblemInstance<f64>, ModelError> {
        self.instantiate_as(t)
    }

    pub fn instantiate_as<T: Real>(&self, t: T) -> Result<ProblemInstance<T>, ModelError> {
        let tf = t.to_f64_lossy();
        if !self.in_horizon(tf) {
            return Err(ModelError::DomainError {
                t: tf,
                reason: format!("outside horizon ({}, {})", self.horizon.0, self.horizon.1),
            });
        }
        let wrap = |e| ModelError::from_timefn(tf, e);
        let a = self
            .a
            .iter()
            .map(|ai| ai.eval(t))
            .collect::<Result<Vec<_>, _>>()
            .map_err(wrap)?;
        let b = self
            .b
            .iter()
            .map(|bi| bi.eval(t))
            .collect::<Result<Vec<_>, _>>()
            .map_err(wrap)?;
        let c = self.c.eval(t).map_err(wrap)?;
        Ok(ProblemInstance::new(t, a, b, c))
    }

    pub fn data_derivative(&self) -> &DataDerivative {
        self.derivative.get_or_init(|| {
            Box::new(DataDerivative {
                a: self.a.iter().map(TimeMat::differentiate).collect(),
                b: self.b.iter().map(TimeExpr::differentiate).collect(),
                c: self.c.differentiate(),
            })
        })
    }

    /// Time derivatives `(Ȧ_i, ḃ, Ċ)` at `t`; fails at non-smooth points.
    pub fn instantiate_derivative(&self, t: f64) -> Result<ProblemInstance<f64>, ModelError> {
        let d = self.data_derivative();
        let wrap = |e| ModelError::from_timefn(t, e);
        let a =
            d.a.iter()
                .map(|ai| ai.eval(t))
                .collect::<Result<Vec<_>, _>>()
                .map_err(wrap)?;
        let b =
            d.b.iter()
                .map(|bi| bi.eval(t))
                .collect::<Result<Vec<_>, _>>()
                .map_err(wrap)?;
        let c = d.c.eval(t).map_err(wrap)?;
        Ok(ProblemInstance::new(t, a, b, c))
    }

    fn all_exprs(&self) -> impl Iterator<Item = (String, &TimeExpr)> {
        let a = self.a.iter().enumerate().flat_map(|(k, ak)| {
            ak.entries()
                .enumerate()
                .map(move |(e, x)| (format!("A{}[{}]", k + 1, e), x))
        });
        let b = self
            .b
            .iter()
            .enumerate()
            .map(|(k, x)| (format!("b{}", k + 1), x));
        let c = self
            .c
            .entries()
            .enumerate()
            .map(|(e, x)| (format!("C[{e}]"), x));
        a.chain(b).chain(c)
    }

    /// True when every data entry is a polynomial in `t`.
    pub fn data_is_polynomial(&self) -> bool {
        self.all_exprs()
            .all(|(_, e)| e.polynomial_coeffs().is_some())
    }

    /// All piecewise breakpoints of the data inside the horizon, sorted.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .all_exprs()
            .flat_map(|(_, e)| e.breakpoints())
            .filter(|&c| self.in_horizon(c))
            .collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// One-sided limit comparison at every breakpoint of every data entry.
    pub fn continuity_audit(&self) -> Vec<(String, BreakpointAudit)> {
        let (lo, hi) = self.horizon;
        self.all_exprs()
            .flat_map(|(loc, e)| {
                e.continuity_audit(lo, hi)
                    .into_iter()
                    .map(move |a| (loc.clone(), a))
            })
            .collect()
    }
}

/// Problem data frozen at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance<T = f64> {
    pub t: T,
    pub a: Vec<SymMat<T>>,
    pub b: Vec<T>,
    pub c: SymMat<T>,
    /// Row `i` is `svec(A_i)`.
    pub atilde: Mat<T>,
}

impl<T: Real> ProblemInstance<T> {
    pub fn new(t: T, a: Vec<SymMat<T>>, b: Vec<T>, c: SymMat<T>) -> Self {
        let n = c.dim();
        assert!(
            a.iter().all(|ai| ai.dim() == n),
            "constraint dimension mismatch"
        );
        assert_eq!(a.len(), b.len(), "constraint count mismatch");
        let rows: Vec<Vec<T>> = a.iter().map(|ai| svec(ai).into_vec()).collect();
        let atilde = if rows.is_empty() {
            Mat::zeros(0, tau(n))
        } else {
            Mat::from_rows(&rows)
        };
        Self { t, a, b, c, atilde }
    }

    pub fn n(&self) -> usize {
        self.c.dim()
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    /// `𝒜[X] = (⟨A_i, X⟩)_i`.
    pub fn apply(&self, x: &SymMat<T>) -> Vec<T> {
        self.a.iter().map(|ai| ai.inner(x)).collect()
    }

    /// `𝒜*[y] = Σ y_i A_i`.
    pub fn adjoint(&self, y: &[T]) -> SymMat<T> {
        let mut out = SymMat::zeros(self.n());
        for (ai, &yi) in self.a.iter().zip(y) {
            out = out.axpy(yi, ai);
        }
        out
    }
}
