//! Multi-start Newton search for all roots of `F = 0`, PSD or not.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{jacobian_matrix, jacobian_parts, residual_parts, unpack, KktError};
use crate::symlin::{eig, norm2, tau, Lu};
use crate::{ProblemInstance, SymMat};

const START_BOX: f64 = 3.0;
const MAX_NEWTON: usize = 100;
const ROOT_TOL: f64 = 1e-10;
const DEDUP_TOL: f64 = 1e-6;
const PSD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct KktRoot {
    pub x: SymMat,
    pub y: Vec<f64>,
    pub z: SymMat,
    pub residual_norm: f64,
    pub sigma_min_rel: f64,
    pub jacobian_nonsingular: bool,
    pub x_psd: bool,
    pub z_psd: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnumerationReport {
    pub roots: Vec<KktRoot>,
    pub starts: usize,
    /// Starts whose Newton iteration reached `‖F‖ ≤ 1e-10`.
    pub converged: usize,
}

fn f_at(inst: &ProblemInstance, w: &[f64]) -> Result<Vec<f64>, KktError> {
    let (x, y, z) = unpack(w, inst.n(), inst.m())?;
    Ok(residual_parts(inst, &x, &y, &z)?.to_vec())
}

/// Damped Newton with backtracking on `‖F‖`.
fn newton(inst: &ProblemInstance, mut w: Vec<f64>) -> Option<Vec<f64>> {
    let (n, m) = (inst.n(), inst.m());
    let mut f = f_at(inst, &w).ok()?;
    let mut fnorm = norm2(&f);
    for _ in 0..MAX_NEWTON {
        if fnorm <= ROOT_TOL {
            return Some(w);
        }
        let (x, _, z) = unpack(&w, n, m).ok()?;
        let j = jacobian_matrix(inst, &x, &z).ok()?;
        let lu = Lu::factor(&j).ok()?;
        let neg: Vec<f64> = f.iter().map(|v| -v).collect();
        let d = lu.solve(&neg);
        if d.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let mut alpha = 1.0;
        loop {
            let trial: Vec<f64> = w.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
            let ft = f_at(inst, &trial).ok()?;
            let tn = norm2(&ft);
            if tn <= (1.0 - 1e-4 * alpha) * fnorm {
                w = trial;
                f = ft;
                fnorm = tn;
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-8 {
                return None;
            }
        }
    }
    (fnorm <= ROOT_TOL).then_some(w)
}

fn lexicographic(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Newton from `n_starts` seeded uniform starts in `[-3, 3]^{2τ(n)+m}`;
/// roots are sorted and deduplicated at `1e-6` in the max norm.
pub fn enumerate_kkt(
    inst: &ProblemInstance,
    n_starts: usize,
    seed: u64,
) -> Result<EnumerationReport, KktError> {
    let (n, m) = (inst.n(), inst.m());
    let dim = 2 * tau(n) + m;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<Vec<f64>> = (0..n_starts)
        .map(|_| (0..dim).map(|_| rng.gen_range(-START_BOX..=START_BOX)).collect())
        .collect();
    let mut found: Vec<Vec<f64>> = starts.into_iter().filter_map(|s| newton(inst, s)).collect();
    let converged = found.len();
    found.sort_by(|a, b| lexicographic(a, b));
    let mut unique: Vec<Vec<f64>> = Vec::new();
    for w in found {
        let dup = unique.iter().any(|u| {
            u.iter()
                .zip(&w)
                .all(|(a, b)| (a - b).abs() <= DEDUP_TOL)
        });
        if !dup {
            unique.push(w);
        }
    }
    let roots = unique
        .into_iter()
        .map(|w| {
            let (x, y, z) = unpack(&w, n, m)?;
            let jac = jacobian_parts(inst, &x, &z)?;
            let residual_norm = residual_parts(inst, &x, &y, &z)?.norm();
            let min_eig = |s: &SymMat| eig(s).map(|e| e.min_eigenvalue()).unwrap_or(f64::NAN);
            Ok(KktRoot {
                x_psd: min_eig(&x) >= -PSD_TOL,
                z_psd: min_eig(&z) >= -PSD_TOL,
                residual_norm,
                sigma_min_rel: jac.sigma_min_rel(),
                jacobian_nonsingular: jac.is_nonsingular(),
                x,
                y,
                z,
            })
        })
        .collect::<Result<Vec<_>, KktError>>()?;
    Ok(EnumerationReport {
        roots,
        starts: n_starts,
        converged,
    })
}
