use super::detect::Tracer;
use super::{
    correct, evaluate_sample, predict, solve_optimal, TraceError, TrajectorySample, DIP_SIGMA,
    JUMP_REL,
};
use crate::{SymMat, TvSdpProblem};

/// Relative size of a value jump, `‖ΔX‖ > VALUE_TOL·(1 + ‖X‖)`.
pub(crate) const VALUE_TOL: f64 = 1e-3;
/// Largest accepted ratio of a monitored quantity between neighbouring
/// samples; keeps dips and islands from falling between samples.
const MONITOR_RATIO: f64 = 4.0;
/// Step cap, in resolutions, after a sample without a trajectory derivative.
/// Nothing certifies smoothness between such samples, and longer steps can
/// straddle an even number of jumps unnoticed.
const BLIND_STEP: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceOptions {
    pub t_start: f64,
    pub t_end: f64,
    /// Defaults to a 200th of `t_end − t_start`.
    pub dt_init: Option<f64>,
    /// Defaults to `event_resolution`.
    pub dt_min: Option<f64>,
    /// Defaults to a 20th of `t_end − t_start`.
    pub dt_max: Option<f64>,
    pub event_resolution: f64,
}

impl TraceOptions {
    pub fn new(t_start: f64, t_end: f64) -> Self {
        Self {
            t_start,
            t_end,
            dt_init: None,
            dt_min: None,
            dt_max: None,
            event_resolution: 1e-4,
        }
    }

    pub fn with_resolution(mut self, event_resolution: f64) -> Self {
        self.event_resolution = event_resolution;
        self
    }

    /// Copy with every defaulted step size filled in.
    pub fn effective(&self) -> TraceOptions {
        let len = self.t_end - self.t_start;
        let dt_min = self.dt_min.unwrap_or(self.event_resolution);
        let dt_max = self.dt_max.unwrap_or(len / 20.0).max(dt_min);
        let dt_init = self.dt_init.unwrap_or(len / 200.0).clamp(dt_min, dt_max);
        TraceOptions {
            dt_init: Some(dt_init),
            dt_min: Some(dt_min),
            dt_max: Some(dt_max),
            ..self.clone()
        }
    }

    pub(crate) fn resolve(&self, p: &TvSdpProblem) -> Result<Resolved, TraceError> {
        let bad = |m: String| Err(TraceError::InvalidOptions(m));
        let (a, b) = (self.t_start, self.t_end);
        if !(a < b) {
            return bad(format!("t_start = {a} must be below t_end = {b}"));
        }
        if !p.in_horizon(a) || !p.in_horizon(b) {
            let (ti, tf) = p.horizon();
            return bad(format!("[{a}, {b}] is not inside the horizon ({ti}, {tf})"));
        }
        if !(self.event_resolution > 0.0) {
            return bad(format!("event_resolution = {} must be positive", self.event_resolution));
        }
        let e = self.effective();
        let (dt_init, dt_min, dt_max) = (e.dt_init.unwrap(), e.dt_min.unwrap(), e.dt_max.unwrap());
        if !(dt_min > 0.0) {
            return bad(format!("dt_min = {dt_min} must be positive"));
        }
        Ok(Resolved {
            t_start: a,
            t_end: b,
            dt_init,
            dt_min,
            dt_max,
            res: self.event_resolution,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Resolved {
    pub t_start: f64,
    pub t_end: f64,
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub res: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub enum EventKind {
    SigmaMinDip,
    UniquenessLoss,
    ComplementarityLoss,
    DerivativeJump,
}

/// A bracketed irregular time.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub t_lo: f64,
    pub t_hi: f64,
    /// Best estimate of the irregular time inside `[t_lo, t_hi]`.
    pub t_star: f64,
    pub kinds: Vec<EventKind>,
    /// Smallest relative Jacobian singular value met while bracketing.
    pub sigma_min_rel: f64,
    /// `(left multi-valued, right multi-valued)` for changes of multiplicity.
    pub multiplicity_change: Option<(bool, bool)>,
    /// `t_star` was located well below the resolution (jump bisection or
    /// minimization) rather than taken as a bracket midpoint.
    pub pinpointed: bool,
    pub left_derivative: Option<SymMat>,
    pub right_derivative: Option<SymMat>,
}

impl Event {
    pub(crate) fn new(t_lo: f64, t_hi: f64, t_star: f64, kind: EventKind, sigma: f64) -> Self {
        Self {
            t_lo,
            t_hi,
            t_star,
            kinds: vec![kind],
            sigma_min_rel: sigma,
            multiplicity_change: None,
            pinpointed: false,
            left_derivative: None,
            right_derivative: None,
        }
    }

    pub fn has(&self, kind: EventKind) -> bool {
        self.kinds.contains(&kind)
    }

    pub(crate) fn add_kind(&mut self, kind: EventKind) {
        if !self.kinds.contains(&kind) {
            self.kinds.push(kind);
            self.kinds.sort();
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceFailure {
    pub t: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceReport {
    pub samples: Vec<TrajectorySample>,
    pub events: Vec<Event>,
    /// Set when the trace stopped early; samples and events up to that point
    /// are kept.
    pub failure: Option<TraceFailure>,
    /// Interior-point solves spent, including bracketing.
    pub solves: usize,
}

struct Verdict {
    ok: bool,
    jump: bool,
    easy: bool,
}

fn ratio(a: f64, b: f64) -> f64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Consistency of `cand` with an extrapolation from the samples before it.
/// `prev2` is only passed when no event lies between it and `prev`.
fn check_step(
    prev2: Option<&TrajectorySample>,
    prev: &TrajectorySample,
    cand: &TrajectorySample,
    h: f64,
) -> Verdict {
    let mut v = Verdict {
        ok: true,
        jump: false,
        easy: true,
    };
    let mut grade = |err: f64, tol: f64, is_jump: bool| {
        if err > tol {
            v.ok = false;
            v.jump |= is_jump;
        }
        if err > 0.25 * tol {
            v.easy = false;
        }
    };
    if !prev.is_multi() && !cand.is_multi() {
        let curvature = match (prev2.and_then(|s| s.dxdt.as_ref()), prev.dxdt.as_ref()) {
            (Some(d0), Some(d1)) => Some(d1.sub(d0).scale(1.0 / (prev.t - prev2.unwrap().t))),
            _ => None,
        };
        let slope = prev.dxdt.clone().or_else(|| {
            prev2.map(|s| prev.point.x.sub(&s.point.x).scale(1.0 / (prev.t - s.t)))
        });
        if let Some(s) = &slope {
            let mut pred = prev.point.x.axpy(h, s);
            if let Some(k) = &curvature {
                pred = pred.axpy(0.5 * h * h, k);
            }
            let err = cand.point.x.sub(&pred).frobenius_norm();
            grade(err, VALUE_TOL * (1.0 + prev.point.x.frobenius_norm()), true);
        }
        if let (Some(d0), Some(d1)) = (&prev.dxdt, &cand.dxdt) {
            let pred = match &curvature {
                Some(k) => d0.axpy(h, k),
                None => d0.clone(),
            };
            let err = d1.sub(&pred).frobenius_norm();
            grade(err, JUMP_REL * (1.0 + d0.frobenius_norm()), true);
        }
        let (s0, s1) = (prev.sigma_min_rel(), cand.sigma_min_rel());
        if s0.max(s1) >= DIP_SIGMA {
            grade(ratio(s0, s1).ln(), MONITOR_RATIO.ln(), false);
        }
    }
    if prev.is_multi() && cand.is_multi() {
        grade(ratio(prev.extent(), cand.extent()).ln(), MONITOR_RATIO.ln(), false);
    }
    v
}

/// Follows the trajectory over `[t_start, t_end]` and brackets every event.
pub fn trace(p: &TvSdpProblem, opts: &TraceOptions) -> Result<TraceReport, TraceError> {
    let o = opts.resolve(p)?;
    let mut tr = Tracer::new(p, o);
    let first = tr.sample(o.t_start, None)?;
    let mut samples = vec![first];
    let mut raw = Vec::new();
    let mut failure = None;
    let mut dt = o.dt_init;
    // Index of the first sample after the latest event; extrapolation never
    // reaches back across an event.
    let mut clean_from = 0;
    let end_tol = 1e-12 * (1.0 + o.t_end.abs());
    while samples.last().expect("non-empty").t < o.t_end - end_tol {
        let prev = samples.last().expect("non-empty").clone();
        if prev.dxdt.is_none() {
            dt = dt.min((BLIND_STEP * o.res).max(o.dt_min));
        }
        let t_next = (prev.t + dt).min(o.t_end);
        let h = t_next - prev.t;
        let at_min = h <= o.dt_min * (1.0 + 1e-9);
        let (cand, newton_steps) = match advance(&mut tr, &prev, t_next, at_min) {
            Ok(c) => c,
            Err(e) if at_min => {
                failure = Some(TraceFailure {
                    t: t_next,
                    reason: e.to_string(),
                });
                break;
            }
            Err(_) => {
                dt = (h / 2.0).max(o.dt_min);
                continue;
            }
        };
        let n = samples.len();
        let prev2 = (n >= 2 && n - 2 >= clean_from).then(|| &samples[n - 2]);
        let v = check_step(prev2, &prev, &cand, h);
        if !v.ok && !at_min {
            dt = (h / 2.0).max(o.dt_min);
            continue;
        }
        let mut found = Vec::new();
        if v.jump {
            found.push(tr.jump_event(&prev, &cand));
        }
        if prev.is_multi() != cand.is_multi() {
            found.push(tr.state_event(&prev, &cand));
        }
        let evented = !found.is_empty();
        match found.into_iter().collect::<Result<Vec<_>, _>>() {
            Ok(evs) => raw.extend(evs),
            Err(e) => {
                failure = Some(TraceFailure {
                    t: prev.t,
                    reason: e.to_string(),
                });
                break;
            }
        }
        samples.push(cand);
        if evented {
            clean_from = samples.len() - 1;
        }
        let easy = v.easy && newton_steps.map_or(true, |k| k <= 2);
        dt = if easy { (1.5 * h).min(o.dt_max) } else { h.max(o.dt_min) };
    }
    let post = tr
        .sigma_dips(&samples)
        .and_then(|mut d| {
            d.extend(tr.extent_dips(&samples)?);
            Ok(d)
        })
        .and_then(|d| {
            raw.extend(d);
            tr.finish_events(std::mem::take(&mut raw))
        });
    let events = match post {
        Ok(evs) => evs,
        Err(e) => {
            failure.get_or_insert(TraceFailure {
                t: samples.last().expect("non-empty").t,
                reason: e.to_string(),
            });
            raw
        }
    };
    Ok(TraceReport {
        samples,
        events,
        failure,
        solves: tr.solves,
    })
}

/// Next sample at `t_next`: continuation where the Jacobian allows it,
/// otherwise an interior-point solve (warm unless the previous optimal set
/// was multi-valued).
fn advance(
    tr: &mut Tracer,
    prev: &TrajectorySample,
    t_next: f64,
    at_min: bool,
) -> Result<(TrajectorySample, Option<usize>), TraceError> {
    let inst = tr.p.instantiate(t_next)?;
    let h = t_next - prev.t;
    if prev.dwdt.is_some() && !prev.is_multi() {
        match predict(prev, &inst, h).and_then(|g| correct(&inst, &g)) {
            Ok(c) => {
                let s = evaluate_sample(tr.p, &inst, c.point)?;
                // Continuation follows an isolated branch; a face here means
                // Newton settled on a near-complementary point instead.
                if !s.is_multi() {
                    return Ok((s, Some(c.iterations)));
                }
            }
            Err(e) if !at_min => return Err(e),
            Err(_) => {}
        }
    }
    let warm = (!prev.is_multi()).then_some(&prev.point);
    tr.solves += 1;
    let res = solve_optimal(&inst, warm)?;
    Ok((evaluate_sample(tr.p, &inst, res.point)?, None))
}
