//! Time-varying semidefinite programming toolkit.
//!
//! Solve a parametric SDP
//!
//! ```text
//! min ⟨C(t), X⟩  s.t.  ⟨A_i(t), X⟩ = b_i(t),  X ⪰ 0,   t ∈ (t_i, t_f)
//! ```
//!
//! at fixed times ([`ipm`]), analyse optimality systems ([`kkt`]), follow the
//! solution trajectory with a predictor-corrector method ([`tracer`]) and
//! label every irregular time by the behaviour of the optimal set around it
//! ([`classifier`]).
//!
//! The linear algebra ([`symlin`]), expression evaluation ([`timefn`]) and
//! problem instantiation ([`model`]) are generic over [`Real`]; the solver and
//! analysis layers work in `f64` through the aliases below.

pub mod classifier;
pub mod ipm;
pub mod kkt;
pub mod model;
pub mod scalar;
pub mod symlin;
pub mod timefn;
pub mod tracer;

pub use scalar::Real;

/// Double-precision symmetric matrix.
pub type SymMat = symlin::SymMat<f64>;
/// Double-precision dense matrix.
pub type Mat = symlin::Mat<f64>;
/// Double-precision symmetric vectorization.
pub type SVec = symlin::SVec<f64>;
/// Double-precision eigendecomposition.
pub type EigDecomp = symlin::EigDecomp<f64>;
/// Problem data evaluated at one time, in `f64`.
pub type ProblemInstance = model::ProblemInstance<f64>;

pub use classifier::{ClassifiedTrajectory, Label, PointType};
pub use ipm::{PrimalDualPoint, SolveResult, SolveStatus};
pub use kkt::{KktJacobian, KktResidual, RegularityCertificate};
pub use model::TvSdpProblem;
pub use timefn::{parse_expr, TimeExpr, TimeMat};
pub use tracer::{Event, TraceOptions, TraceReport, TrajectorySample};
