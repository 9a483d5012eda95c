//! Bracketing, pinpointing and post-processing of events.

use super::trace::{Event, EventKind, Resolved, VALUE_TOL};
use super::{
    evaluate_sample, one_sided_estimates_from, solve_optimal, Side, TraceError, TrajectorySample,
    DERIV_DELTA, DIP_SIGMA,
};
use crate::ipm::{face_extent, PrimalDualPoint, FACE_TOL};
use crate::kkt::jacobian;
use crate::TvSdpProblem;

const GOLDEN: f64 = 0.618_033_988_749_894_8;
/// Islands narrower than this many resolutions are reported as one event.
pub(crate) const ISLAND_FACTOR: f64 = 20.0;

pub(crate) struct Tracer<'a> {
    pub p: &'a TvSdpProblem,
    pub o: Resolved,
    pub solves: usize,
}

impl<'a> Tracer<'a> {
    pub fn new(p: &'a TvSdpProblem, o: Resolved) -> Self {
        Self { p, o, solves: 0 }
    }

    pub fn sample(
        &mut self,
        t: f64,
        warm: Option<&PrimalDualPoint>,
    ) -> Result<TrajectorySample, TraceError> {
        let inst = self.p.instantiate(t)?;
        self.solves += 1;
        let res = solve_optimal(&inst, warm)?;
        evaluate_sample(self.p, &inst, res.point)
    }

    fn sigma_at(&mut self, t: f64) -> Result<f64, TraceError> {
        let inst = self.p.instantiate(t)?;
        self.solves += 1;
        let res = solve_optimal(&inst, None)?;
        Ok(jacobian(&inst, &res.point)?.sigma_min_rel())
    }

    fn extent_at(&mut self, t: f64) -> Result<f64, TraceError> {
        let inst = self.p.instantiate(t)?;
        self.solves += 1;
        let res = solve_optimal(&inst, None)?;
        Ok(face_extent(&inst, &res.point.x).map_or(0.0, |f| f.extent))
    }

    /// Bisection on the multiplicity flag between two samples of opposite
    /// state, down to `width`.
    fn bisect_state(
        &mut self,
        mut lo: f64,
        mut hi: f64,
        left_multi: bool,
        width: f64,
    ) -> Result<(f64, f64, f64), TraceError> {
        let mut sigma = f64::INFINITY;
        while hi - lo > width {
            let mid = 0.5 * (lo + hi);
            let s = self.sample(mid, None)?;
            sigma = sigma.min(s.sigma_min_rel());
            if s.is_multi() == left_multi {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((lo, hi, sigma))
    }

    pub fn state_event(
        &mut self,
        a: &TrajectorySample,
        b: &TrajectorySample,
    ) -> Result<Event, TraceError> {
        let left_multi = a.is_multi();
        let (lo, hi, sigma) = self.bisect_state(a.t, b.t, left_multi, self.o.res)?;
        let sigma = sigma.min(a.sigma_min_rel()).min(b.sigma_min_rel());
        let mut ev = Event::new(lo, hi, 0.5 * (lo + hi), EventKind::UniquenessLoss, sigma);
        ev.multiplicity_change = Some((left_multi, !left_multi));
        Ok(ev)
    }

    /// Event for a step that failed the extrapolation test at the minimum
    /// step. Value jumps are located by bisection on the solution itself.
    pub fn jump_event(
        &mut self,
        a: &TrajectorySample,
        b: &TrajectorySample,
    ) -> Result<Event, TraceError> {
        let sigma = a.sigma_min_rel().min(b.sigma_min_rel());
        let gap = b.point.x.sub(&a.point.x).frobenius_norm();
        let mut ev = Event::new(a.t, b.t, 0.5 * (a.t + b.t), EventKind::DerivativeJump, sigma);
        if gap <= 0.5 * VALUE_TOL * (1.0 + a.point.x.frobenius_norm()) {
            return Ok(ev);
        }
        let (mut lo, mut hi) = (a.clone(), b.clone());
        for _ in 0..64 {
            if hi.t - lo.t <= 1e-12 * (1.0 + lo.t.abs()) {
                break;
            }
            let mid = self.sample(0.5 * (lo.t + hi.t), None)?;
            ev.sigma_min_rel = ev.sigma_min_rel.min(mid.sigma_min_rel());
            let full = hi.point.x.sub(&lo.point.x).frobenius_norm();
            let dl = mid.point.x.sub(&lo.point.x).frobenius_norm();
            let dh = mid.point.x.sub(&hi.point.x).frobenius_norm();
            if mid.is_multi() || (dl > 0.25 * full && dh > 0.25 * full) {
                // A point strictly inside the jump: the set-valued time itself.
                ev.t_star = mid.t;
                ev.pinpointed = true;
                ev.add_kind(EventKind::UniquenessLoss);
                return Ok(ev);
            }
            if dl < dh {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        ev.t_star = 0.5 * (lo.t + hi.t);
        ev.pinpointed = true;
        Ok(ev)
    }

    /// Golden-section search for the minimum of `f` on `[l, r]`.
    fn golden(
        &mut self,
        mut l: f64,
        mut r: f64,
        tol: f64,
        stop_below: f64,
        mut f: impl FnMut(&mut Self, f64) -> Result<f64, TraceError>,
    ) -> Result<(f64, f64), TraceError> {
        let mut x1 = r - GOLDEN * (r - l);
        let mut x2 = l + GOLDEN * (r - l);
        let mut f1 = f(self, x1)?;
        let mut f2 = f(self, x2)?;
        while r - l > tol && f1.min(f2) > stop_below {
            if f1 <= f2 {
                r = x2;
                x2 = x1;
                f2 = f1;
                x1 = r - GOLDEN * (r - l);
                f1 = f(self, x1)?;
            } else {
                l = x1;
                x1 = x2;
                f1 = f2;
                x2 = l + GOLDEN * (r - l);
                f2 = f(self, x2)?;
            }
        }
        Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
    }

    fn dip_event(&mut self, l: f64, r: f64) -> Result<Option<Event>, TraceError> {
        let tol = 1e-12 * (1.0 + l.abs().max(r.abs()));
        let (t, sigma) = self.golden(l, r, tol, f64::NEG_INFINITY, |s, t| Ok(s.sigma_at(t)?.max(1e-300).ln()))?;
        let sigma = sigma.exp();
        if sigma >= DIP_SIGMA {
            return Ok(None);
        }
        let half = 0.5 * self.o.res;
        let mut ev = Event::new(
            (t - half).max(l),
            (t + half).min(r),
            t,
            EventKind::SigmaMinDip,
            sigma,
        );
        ev.pinpointed = true;
        if self.sample(t, None)?.is_multi() {
            ev.add_kind(EventKind::UniquenessLoss);
        }
        Ok(Some(ev))
    }

    /// Dips of the Jacobian's smallest singular value among single-valued
    /// samples: short runs below [`DIP_SIGMA`] bounded by regular samples,
    /// and isolated V-shaped minima between samples.
    pub fn sigma_dips(&mut self, samples: &[TrajectorySample]) -> Result<Vec<Event>, TraceError> {
        let run_max = (100.0 * self.o.res).max(0.01 * (self.o.t_end - self.o.t_start));
        let regular = |s: &TrajectorySample| !s.is_multi() && s.sigma_min_rel() >= DIP_SIGMA;
        let low = |s: &TrajectorySample| !s.is_multi() && s.sigma_min_rel() < DIP_SIGMA;
        let mut out = Vec::new();
        let mut i = 1;
        while i + 1 < samples.len() {
            if low(&samples[i]) && regular(&samples[i - 1]) {
                let mut j = i;
                while j < samples.len() && low(&samples[j]) {
                    j += 1;
                }
                if j < samples.len()
                    && regular(&samples[j])
                    && samples[j].t - samples[i - 1].t <= run_max
                {
                    out.extend(self.dip_event(samples[i - 1].t, samples[j].t)?);
                }
                i = j;
                continue;
            }
            let (a, b, c) = (&samples[i - 1], &samples[i], &samples[i + 1]);
            if regular(a) && regular(b) && regular(c) {
                let (sa, sb, sc) = (a.sigma_min_rel(), b.sigma_min_rel(), c.sigma_min_rel());
                if sb <= sa && sb <= sc && sb < 0.5 * sa.max(sc) {
                    out.extend(self.dip_event(a.t, c.t)?);
                }
            }
            i += 1;
        }
        Ok(out)
    }

    /// Local minima of the face extent among multi-valued samples that reach
    /// a single-valued point: the island is reported by its two edges.
    pub fn extent_dips(&mut self, samples: &[TrajectorySample]) -> Result<Vec<Event>, TraceError> {
        let mut out = Vec::new();
        for w in samples.windows(3) {
            let (a, b, c) = (&w[0], &w[1], &w[2]);
            if !(a.is_multi() && b.is_multi() && c.is_multi()) {
                continue;
            }
            let (ea, eb, ec) = (a.extent(), b.extent(), c.extent());
            if !(eb <= ea && eb <= ec && eb < 0.5 * ea.max(ec)) {
                continue;
            }
            let tol = 0.1 * self.o.res;
            let (t, e) = self.golden(a.t, c.t, tol, FACE_TOL, |s, t| s.extent_at(t))?;
            if e > FACE_TOL {
                continue;
            }
            let (l0, l1, sl) = self.bisect_state(a.t, t, true, tol)?;
            let (r0, r1, sr) = self.bisect_state(t, c.t, false, tol)?;
            let mut left = Event::new(l0, l1, 0.5 * (l0 + l1), EventKind::UniquenessLoss, sl);
            left.multiplicity_change = Some((true, false));
            let mut right = Event::new(r0, r1, 0.5 * (r0 + r1), EventKind::UniquenessLoss, sr);
            right.multiplicity_change = Some((false, true));
            out.push(left);
            out.push(right);
        }
        Ok(out)
    }

    /// Sorts and merges raw events, collapses narrow islands, and attaches
    /// one-sided derivatives and the complementarity test.
    pub fn finish_events(&mut self, mut raw: Vec<Event>) -> Result<Vec<Event>, TraceError> {
        let res = self.o.res;
        raw.sort_by(|a, b| a.t_star.total_cmp(&b.t_star));
        let mut merged: Vec<Event> = Vec::new();
        for ev in raw {
            match merged.last_mut() {
                Some(last) if ev.t_star - last.t_star <= 2.0 * res => absorb(last, ev),
                _ => merged.push(ev),
            }
        }
        let mut events: Vec<Event> = Vec::new();
        for ev in merged {
            if let Some(last) = events.last_mut() {
                let island = match (last.multiplicity_change, ev.multiplicity_change) {
                    (Some((a, b)), Some((c, d))) => a == d && b == c && a != b,
                    _ => false,
                };
                if island && ev.t_star - last.t_star <= ISLAND_FACTOR * res {
                    let mid = 0.5 * (last.t_star + ev.t_star);
                    let outer = last.multiplicity_change.map(|(a, _)| (a, a));
                    absorb(last, ev);
                    last.t_star = mid;
                    last.t_lo = mid - 0.5 * res;
                    last.t_hi = mid + 0.5 * res;
                    last.multiplicity_change = outer;
                    continue;
                }
            }
            events.push(ev);
        }
        let n = self.p.n();
        for k in 0..events.len() {
            let t = events[k].t_star;
            let gap_l = if k > 0 { t - events[k - 1].t_star } else { f64::INFINITY };
            let gap_r = events.get(k + 1).map_or(f64::INFINITY, |e| e.t_star - t);
            let delta = DERIV_DELTA.min(0.25 * gap_l.min(gap_r));
            let left = self.side(t, Side::Left, delta);
            let right = self.side(t, Side::Right, delta);
            let ev = &mut events[k];
            if let (Some((sl, _)), Some((sr, _))) = (&left, &right) {
                let rx = sl.certificate.rank_x.min(sr.certificate.rank_x);
                let rz = sl.certificate.rank_z.min(sr.certificate.rank_z);
                if rx + rz < n {
                    ev.add_kind(EventKind::ComplementarityLoss);
                }
            }
            ev.left_derivative = left.and_then(|(_, d)| d);
            ev.right_derivative = right.and_then(|(_, d)| d);
        }
        Ok(events)
    }

    /// Sample at `t ± delta` with the one-sided derivative there, if the
    /// optimal set is single-valued on that side.
    fn side(
        &mut self,
        t: f64,
        side: Side,
        delta: f64,
    ) -> Option<(TrajectorySample, Option<crate::SymMat>)> {
        let target = t + side.sign() * delta;
        if !self.p.in_horizon(target) {
            return None;
        }
        let (s, est, used) = one_sided_estimates_from(self.p, t, side, delta).ok()?;
        self.solves += used;
        let d = est.and_then(|e| e.preferred().cloned());
        Some((s, d))
    }
}

fn absorb(into: &mut Event, ev: Event) {
    into.t_lo = into.t_lo.min(ev.t_lo);
    into.t_hi = into.t_hi.max(ev.t_hi);
    into.sigma_min_rel = into.sigma_min_rel.min(ev.sigma_min_rel);
    if ev.pinpointed && !into.pinpointed {
        into.t_star = ev.t_star;
        into.pinpointed = true;
    }
    if into.multiplicity_change.is_none() {
        into.multiplicity_change = ev.multiplicity_change;
    } else if let (Some((a, _)), Some((_, d))) = (into.multiplicity_change, ev.multiplicity_change)
    {
        into.multiplicity_change = Some((a, d));
    }
    for k in ev.kinds {
        into.add_kind(k);
    }
}
