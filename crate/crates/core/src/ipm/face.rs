//! Size of the optimal face.
//!
//! Two complementary measurements:
//!
//! * [`face_extent`] is algebraic. With `V` spanning the range of a maximal
//!   rank optimal `X*`, the optimal face is `{V W Vᵀ : W ⪰ 0, 𝒜[V W Vᵀ] = b}`.
//!   A trivial kernel of `W ↦ 𝒜[V W Vᵀ]` means a single point; otherwise the
//!   extent along each kernel direction follows from an eigenvalue problem.
//! * [`solve_face_probe`] optimizes a probe objective `⟨G, X⟩` over the
//!   relaxed face `{X feasible, ⟨C, X⟩ ≤ p* + ε}` with a second SDP.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{solve, IpmError};
use crate::symlin::{cholesky, eig, smat_slice, svd, svec, tau};
use crate::{Mat, ProblemInstance, SymMat};

/// Relative objective slack of the probe problem: `ε = FACE_EPS_REL·(1 + |p*|)`.
pub const FACE_EPS_REL: f64 = 1e-7;
/// Face extents above this are counted as a multi-valued optimal set.
pub const FACE_TOL: f64 = 1e-5;
/// Probe solutions larger than this in Frobenius norm indicate an unbounded
/// relaxed face.
const DIAMETER_CAP: f64 = 1e6;
/// Extents along a kernel direction are clipped here.
const EXTENT_CAP: f64 = 1e6;
/// Rank cut for `X` (relative to `max(1, λ_max)`) and null-space cut for the
/// restricted constraint map. Interior-point solutions at points without
/// strict complementarity keep `O(√μ)` eigenvalues, which perturb the range
/// basis at about this level.
const FACE_RANK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

fn pad(s: &SymMat, n: usize) -> SymMat {
    SymMat::from_fn(n + 1, |i, j| if i < n && j < n { s.get(i, j) } else { 0.0 })
}

/// `min/max ⟨G, X⟩` over `𝒜[X] = b`, `⟨C, X⟩ + s = p* + ε`, `X ⪰ 0`, `s ≥ 0`,
/// with `s` embedded as the trailing diagonal entry of `diag(X, s)`.
fn probe_instance(
    inst: &ProblemInstance,
    p_star: f64,
    g: &SymMat,
    sense: Sense,
    eps: f64,
) -> ProblemInstance {
    let n = inst.n();
    let mut a: Vec<SymMat> = inst.a.iter().map(|ai| pad(ai, n)).collect();
    let mut b = inst.b.clone();
    let mut cs = pad(&inst.c, n);
    cs.set(n, n, 1.0);
    a.push(cs);
    b.push(p_star + eps);
    for i in 0..n {
        a.push(SymMat::unit(n + 1, i, n));
        b.push(0.0);
    }
    let obj = match sense {
        Sense::Min => pad(g, n),
        Sense::Max => pad(g, n).scale(-1.0),
    };
    ProblemInstance::new(inst.t, a, b, obj)
}

/// Optimal probe value with the default slack.
pub fn solve_face_probe(
    inst: &ProblemInstance,
    p_star: f64,
    g: &SymMat,
    sense: Sense,
) -> Result<f64, IpmError> {
    solve_face_probe_eps(inst, p_star, g, sense, FACE_EPS_REL * (1.0 + p_star.abs()))
}

pub fn solve_face_probe_eps(
    inst: &ProblemInstance,
    p_star: f64,
    g: &SymMat,
    sense: Sense,
    eps: f64,
) -> Result<f64, IpmError> {
    if g.dim() != inst.n() {
        return Err(IpmError::DimensionMismatch(format!(
            "probe matrix has dimension {}, instance {}",
            g.dim(),
            inst.n()
        )));
    }
    let probe = probe_instance(inst, p_star, g, sense, eps);
    let res = solve(&probe, None)?;
    if !res.is_optimal() {
        return Err(IpmError::SolverFailure(format!(
            "face probe at t = {} ended with {:?}",
            inst.t, res.status
        )));
    }
    let n = inst.n();
    let x = SymMat::from_fn(n, |i, j| res.point.x.get(i, j));
    if x.frobenius_norm() > DIAMETER_CAP {
        return Err(IpmError::NumericalTrouble(format!(
            "relaxed optimal face at t = {} exceeds the diameter cap",
            inst.t
        )));
    }
    Ok(g.inner(&x))
}

/// `max ⟨G, X⟩ − min ⟨G, X⟩` over the relaxed face.
pub fn probe_range(
    inst: &ProblemInstance,
    p_star: f64,
    g: &SymMat,
    eps: f64,
) -> Result<f64, IpmError> {
    let hi = solve_face_probe_eps(inst, p_star, g, Sense::Max, eps)?;
    let lo = solve_face_probe_eps(inst, p_star, g, Sense::Min, eps)?;
    Ok((hi - lo).max(0.0))
}

/// Deterministic unit-norm probe directions.
pub fn probe_directions(n: usize, count: usize, seed: u64) -> Vec<SymMat> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let g = SymMat::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let norm = g.frobenius_norm();
            g.scale(1.0 / norm)
        })
        .collect()
}

/// Outcome of the face test at two slack levels.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceTest {
    /// Largest probe range at `ε₁ = 1e-5·(1 + |p*|)`.
    pub range_coarse: f64,
    /// Largest probe range at `ε₂ = 1e-7·(1 + |p*|)`.
    pub range_fine: f64,
    pub ratio: f64,
    /// `range_fine > FACE_TOL` and the range does not shrink with `ε`.
    pub genuine: bool,
}

/// Separates a genuine optimal face from the `√ε`-sized sublevel sets around
/// a unique solution: a true face keeps its size as `ε → 0`, curvature does
/// not (ratio ≈ 0.1 for quadratic growth, ≈ 0.01 for linear growth).
pub fn two_level_face_test(
    inst: &ProblemInstance,
    p_star: f64,
    directions: &[SymMat],
) -> Result<FaceTest, IpmError> {
    let scale = 1.0 + p_star.abs();
    let (mut coarse, mut fine) = (0.0f64, 0.0f64);
    for g in directions {
        let c = probe_range(inst, p_star, g, 1e-5 * scale)?;
        let f = probe_range(inst, p_star, g, FACE_EPS_REL * scale)?;
        if f > fine {
            fine = f;
            coarse = c;
        }
    }
    let ratio = if coarse > 0.0 { fine / coarse } else { 0.0 };
    Ok(FaceTest {
        range_coarse: coarse,
        range_fine: fine,
        ratio,
        genuine: fine > FACE_TOL && ratio > 0.5,
    })
}

/// Algebraic face measurement around an optimal `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceMeasure {
    pub rank: usize,
    pub kernel_dim: usize,
    /// Largest extent (Frobenius length) of the face along a kernel direction.
    pub extent: f64,
}

impl FaceMeasure {
    pub fn is_multi(&self) -> bool {
        self.extent > FACE_TOL
    }
}

pub fn face_extent(inst: &ProblemInstance, x: &SymMat) -> Result<FaceMeasure, IpmError> {
    let trouble = |e: crate::symlin::SymlinError| IpmError::NumericalTrouble(e.to_string());
    let n = inst.n();
    let ex = eig(x).map_err(trouble)?;
    let scale = 1f64.max(ex.max_eigenvalue());
    let r = ex.lambdas.iter().filter(|&&l| l > FACE_RANK_TOL * scale).count();
    if r == 0 {
        return Ok(FaceMeasure {
            rank: 0,
            kernel_dim: 0,
            extent: 0.0,
        });
    }
    let v = Mat::from_fn(n, r, |i, j| ex.q[(i, j)]);
    let vt = v.transpose();
    let tr = tau(r);
    let kernel = if inst.m() == 0 {
        Mat::identity(tr)
    } else {
        let rows: Vec<Vec<f64>> = inst
            .a
            .iter()
            .map(|ai| svec(&ai.congruence(&vt)).into_vec())
            .collect();
        let k = Mat::from_rows(&rows);
        let s = svd(&k).map_err(trouble)?;
        if s.sigma_max() == 0.0 {
            Mat::identity(tr)
        } else {
            s.null_space(FACE_RANK_TOL)
        }
    };
    let kernel_dim = kernel.cols();
    let w_star = x.congruence(&vt);
    let chol = cholesky(&w_star).map_err(trouble)?;
    let mut extent = 0.0f64;
    for k in 0..kernel_dim {
        let wk = smat_slice(&kernel.column(k)).map_err(trouble)?;
        let mk = eig(&chol.whiten(&wk)).map_err(trouble)?;
        // W* + s Wk ⪰ 0  ⇔  I + s M ⪰ 0.
        let hi = if mk.min_eigenvalue() < 0.0 {
            -1.0 / mk.min_eigenvalue()
        } else {
            EXTENT_CAP
        };
        let lo = if mk.max_eigenvalue() > 0.0 {
            -1.0 / mk.max_eigenvalue()
        } else {
            -EXTENT_CAP
        };
        extent = extent.max((hi - lo).min(EXTENT_CAP));
    }
    Ok(FaceMeasure {
        rank: r,
        kernel_dim,
        extent,
    })
}
