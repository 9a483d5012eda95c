use super::{Direction, IpmOptions, PrimalDualPoint, SolveResult, SolveStatus};
use crate::symlin::{cholesky, eig, skron_general, smat_slice, svec, tau, Lu};
use crate::{Mat, ProblemInstance, SymMat};

#[derive(Debug, Clone)]
pub(super) struct Iterate {
    x: SymMat,
    y: Vec<f64>,
    z: SymMat,
}

impl Iterate {
    /// `X = ξ_p I`, `Z = ξ_d I`, `y = 0` with the scale factors taken from
    /// the data norms.
    pub(super) fn cold(inst: &ProblemInstance) -> Self {
        let n = inst.n() as f64;
        let xi_p = inst
            .a
            .iter()
            .zip(&inst.b)
            .map(|(a, b)| n * (1.0 + b.abs()) / (1.0 + a.frobenius_norm()))
            .fold(n.sqrt().max(1.0), f64::max);
        let xi_d = inst
            .a
            .iter()
            .map(|a| a.frobenius_norm())
            .fold(inst.c.frobenius_norm().max(n.sqrt()).max(1.0), f64::max);
        Self {
            x: SymMat::identity(inst.n()).scale(xi_p),
            y: vec![0.0; inst.m()],
            z: SymMat::identity(inst.n()).scale(xi_d),
        }
    }

    pub(super) fn warm(w: &PrimalDualPoint, shift: f64) -> Self {
        let lift = |s: &SymMat| {
            let lmin = eig(s).map(|e| e.min_eigenvalue()).unwrap_or(0.0);
            s.add_identity(shift + (-lmin).max(0.0))
        };
        Self {
            x: lift(&w.x),
            y: w.y.clone(),
            z: lift(&w.z),
        }
    }
}

struct Step {
    dx: SymMat,
    dy: Vec<f64>,
    dz: SymMat,
}

/// Scaled Newton system for one iterate.
struct System {
    lu: Lu<f64>,
    p: Mat,
    p_inv: Mat,
    m: usize,
    tn: usize,
}

/// `H_P(M) = ½(P M P⁻¹ + (P M P⁻¹)ᵀ)`.
fn sym_scaled(p: &Mat, p_inv: &Mat, m: &Mat) -> SymMat {
    let s = p.matmul(m).matmul(p_inv);
    SymMat::from_fn(s.rows(), |i, j| 0.5 * (s[(i, j)] + s[(j, i)]))
}

impl System {
    fn build(inst: &ProblemInstance, it: &Iterate, dir: Direction) -> Option<Self> {
        let n = inst.n();
        let m = inst.m();
        let tn = tau(n);
        let (p, p_inv) = match dir {
            Direction::Aho => (Mat::identity(n), Mat::identity(n)),
            Direction::Hkm => {
                let e = eig(&it.z).ok()?;
                let floor = e.max_eigenvalue() * f64::EPSILON;
                if !(floor > 0.0) {
                    return None;
                }
                (
                    e.map_eigenvalues(|l| l.max(floor).sqrt()).to_mat(),
                    e.map_eigenvalues(|l| 1.0 / l.max(floor).sqrt()).to_mat(),
                )
            }
        };
        // H_P(ΔX Z + X ΔZ) = E svec(ΔX) + F svec(ΔZ).
        let p_inv_t = p_inv.transpose();
        let e = skron_general(&p, &p_inv_t.matmul(&it.z.to_mat())).ok()?;
        let f = skron_general(&p.matmul(&it.x.to_mat()), &p_inv_t).ok()?;
        let size = m + 2 * tn;
        let mut k = Mat::zeros(size, size);
        k.set_block(0, 0, &inst.atilde);
        k.set_block(m, tn, &inst.atilde.transpose());
        k.set_block(m, tn + m, &Mat::identity(tn));
        k.set_block(m + tn, 0, &e);
        k.set_block(m + tn, tn + m, &f);
        let lu = Lu::factor(&k).ok()?;
        Some(Self {
            lu,
            p,
            p_inv,
            m,
            tn,
        })
    }

    fn solve(&self, rp: &[f64], rd: &SymMat, rc: &SymMat) -> Option<Step> {
        let mut rhs = Vec::with_capacity(self.m + 2 * self.tn);
        rhs.extend_from_slice(rp);
        rhs.extend(svec(rd).into_vec());
        rhs.extend(svec(rc).into_vec());
        let sol = self.lu.solve(&rhs);
        if sol.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let dx = smat_slice(&sol[..self.tn]).ok()?;
        let dy = sol[self.tn..self.tn + self.m].to_vec();
        let dz = smat_slice(&sol[self.tn + self.m..]).ok()?;
        Some(Step { dx, dy, dz })
    }
}

/// Largest `α` with `S + α ΔS ⪰ 0` (infinite when `ΔS ⪰ 0`).
fn max_step(s: &SymMat, ds: &SymMat) -> Option<f64> {
    let ch = cholesky(s).ok()?;
    let lmin = eig(&ch.whiten(ds)).ok()?.min_eigenvalue();
    Some(if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    })
}

fn merit(pt: &PrimalDualPoint, pobj: f64) -> f64 {
    pt.residual_primal
        .max(pt.residual_dual)
        .max(pt.gap.abs() / (1.0 + pobj.abs()))
}

pub(super) fn run(
    inst: &ProblemInstance,
    start: Iterate,
    dir: Direction,
    opts: &IpmOptions,
) -> SolveResult {
    let n = inst.n() as f64;
    let mut it = start;
    let mut iterations = 0;
    let mut best: Option<(f64, bool, PrimalDualPoint)> = None;
    let mut polish_left = opts.polish_iters;
    let mut stalls = 0;
    let mut trouble = false;

    loop {
        let pt = PrimalDualPoint::evaluate(inst, it.x.clone(), it.y.clone(), it.z.clone());
        let pobj = inst.c.inner(&it.x);
        let score = merit(&pt, pobj);
        let ok = pt.residual_primal <= opts.tol
            && pt.residual_dual <= opts.tol
            && pt.gap.abs() <= opts.tol * (1.0 + pobj.abs());
        let improved = match &best {
            None => true,
            Some((b, bok, _)) => (ok && !bok) || (ok == *bok && score < *b),
        };
        if improved {
            best = Some((score, ok, pt));
        } else if ok {
            // Polishing stopped paying off.
            break;
        }
        if ok {
            if polish_left == 0 || score < 1e-15 {
                break;
            }
            polish_left -= 1;
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        let Some(sys) = System::build(inst, &it, dir) else {
            trouble = true;
            break;
        };
        let rp: Vec<f64> = inst
            .b
            .iter()
            .zip(inst.apply(&it.x))
            .map(|(b, a)| b - a)
            .collect();
        let rd = inst.c.sub(&inst.adjoint(&it.y)).sub(&it.z);
        let xz = it.x.to_mat().matmul(&it.z.to_mat());
        let hxz = sym_scaled(&sys.p, &sys.p_inv, &xz);
        let mu = it.x.inner(&it.z) / n;

        let Some(aff) = sys.solve(&rp, &rd, &hxz.scale(-1.0)) else {
            trouble = true;
            break;
        };
        let (Some(ap), Some(ad)) = (max_step(&it.x, &aff.dx), max_step(&it.z, &aff.dz)) else {
            trouble = true;
            break;
        };
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let mu_aff = it.x.axpy(ap, &aff.dx).inner(&it.z.axpy(ad, &aff.dz)) / n;
        let sigma = if mu > 0.0 {
            (mu_aff.max(0.0) / mu).powi(3).min(1.0)
        } else {
            0.0
        };
        let cross = sym_scaled(
            &sys.p,
            &sys.p_inv,
            &aff.dx.to_mat().matmul(&aff.dz.to_mat()),
        );
        let rc = SymMat::identity(inst.n())
            .scale(sigma * mu)
            .sub(&hxz)
            .sub(&cross);
        let Some(step) = sys.solve(&rp, &rd, &rc) else {
            trouble = true;
            break;
        };
        let (Some(ap), Some(ad)) = (max_step(&it.x, &step.dx), max_step(&it.z, &step.dz)) else {
            trouble = true;
            break;
        };
        let ap = (opts.step_fraction * ap).min(1.0);
        let ad = (opts.step_fraction * ad).min(1.0);
        if ap < 1e-10 && ad < 1e-10 {
            stalls += 1;
            if stalls >= 3 {
                trouble = true;
                break;
            }
        } else {
            stalls = 0;
        }
        let next = Iterate {
            x: it.x.axpy(ap, &step.dx),
            y: it.y.iter().zip(&step.dy).map(|(y, d)| y + ad * d).collect(),
            z: it.z.axpy(ad, &step.dz),
        };
        if !next.x.is_finite() || !next.z.is_finite() {
            trouble = true;
            break;
        }
        it = next;
    }

    let (_, ok, point) = best.expect("first iterate is always recorded");
    let status = if ok {
        SolveStatus::Optimal
    } else if trouble {
        SolveStatus::NumericalTrouble
    } else {
        SolveStatus::MaxIter
    };
    SolveResult {
        p_star: inst.c.inner(&point.x),
        d_star: inst.b.iter().zip(&point.y).map(|(b, y)| b * y).sum(),
        point,
        status,
        iterations,
        direction: dir,
    }
}
