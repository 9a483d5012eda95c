//! Point types of the optimal set-valued map.
//!
//! Each traced event is probed on both sides: the face test at `t*` decides
//! multiplicity there, seven cold solves on each side give the multiplicity
//! profile next to it, and the tracer's one-sided derivatives decide
//! differentiability. Set-valued continuity is not computed from its
//! definition; it is read off the face extents, which shrink to zero towards
//! `t*` at a continuous onset and stay bounded away from zero at a
//! discontinuous one.

mod audit;
mod accumulate;

pub use accumulate::Accumulation;
pub use audit::{taxonomy_audit, AuditRow, TaxonomyAudit};

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::ipm::{probe_directions, two_level_face_test, FaceTest, FACE_TOL};
use crate::tracer::{
    sample_at, solve_optimal, trace, Event, TraceError, TraceFailure, TraceOptions,
    TrajectorySample, JUMP_REL,
};
use crate::{SymMat, TvSdpProblem};

/// Probe times on each side of an event.
pub const SIDE_PROBES: usize = 7;
/// Default probing window in event resolutions.
pub const WINDOW_FACTOR: f64 = 10.0;
/// Near-to-far extent ratio below which the face is taken to shrink to zero.
pub const ONSET_RATIO: f64 = 0.5;
/// Gap ratio required between consecutive events of an accumulating run.
pub const ACCUMULATION_RATIO: f64 = 0.9;
/// Minimum number of events in an accumulating run.
pub const ACCUMULATION_MIN_EVENTS: usize = 4;
const PROBE_DIRECTIONS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Label {
    Regular,
    NonDifferentiable,
    DiscontinuousIsolatedMultiple,
    DiscontinuousNonIsolatedMultiple,
    ContinuousBifurcation,
    IrregularAccumulation,
    Unknown,
}

impl Label {
    pub const ALL: [Label; 7] = [
        Label::Regular,
        Label::NonDifferentiable,
        Label::DiscontinuousIsolatedMultiple,
        Label::DiscontinuousNonIsolatedMultiple,
        Label::ContinuousBifurcation,
        Label::IrregularAccumulation,
        Label::Unknown,
    ];
}

/// Time direction in which the decision procedure was applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SideConvention {
    Forward,
    /// `t ↦ −t`: the multi-valued side is on the left.
    Reversed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evidence {
    pub check: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Evidence {
    fn above(check: &str, value: f64, threshold: f64) -> Self {
        Self {
            check: check.to_string(),
            value,
            threshold,
            passed: value > threshold,
        }
    }

    fn at_most(check: &str, value: f64, threshold: f64) -> Self {
        Self {
            check: check.to_string(),
            value,
            threshold,
            passed: value <= threshold,
        }
    }

    fn below(check: &str, value: f64, threshold: f64) -> Self {
        Self {
            check: check.to_string(),
            value,
            threshold,
            passed: value < threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointType {
    pub label: Label,
    pub evidence: Vec<Evidence>,
    pub side_convention: SideConvention,
}

impl PointType {
    fn unknown(evidence: Vec<Evidence>) -> Self {
        Self {
            label: Label::Unknown,
            evidence,
            side_convention: SideConvention::Forward,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("event at t = {t} is {spacing:.2e} from its neighbour; too close to probe on its own")]
    InsufficientResolution { t: f64, spacing: f64 },
    #[error("face probe failed at t = {t}: {reason}")]
    Probe { t: f64, reason: String },
}

/// Multiplicity next to `t*` on one side, nearest probe first.
#[derive(Debug, Clone, PartialEq)]
pub struct SideProfile {
    pub times: Vec<f64>,
    pub extents: Vec<f64>,
    pub multi: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SideState {
    Single,
    /// Multi-valued throughout with a face that does not shrink towards `t*`.
    Persistent,
    /// Multi-valued away from `t*` with a face shrinking towards it.
    Growing,
    Mixed,
}

impl SideProfile {
    /// `extent(nearest) / extent(farthest)`.
    pub fn onset_ratio(&self) -> f64 {
        let far = *self.extents.last().expect("probes");
        if far > 0.0 {
            self.extents[0] / far
        } else {
            f64::INFINITY
        }
    }

    fn monotone(&self) -> bool {
        self.extents
            .windows(2)
            .all(|w| w[1] >= 0.9 * w[0] - FACE_TOL)
    }

    pub fn state(&self) -> SideState {
        if self.multi.iter().all(|m| !m) {
            return SideState::Single;
        }
        if !*self.multi.last().expect("probes") {
            return SideState::Mixed;
        }
        let r = self.onset_ratio();
        if self.multi.iter().all(|&m| m) && r >= ONSET_RATIO {
            SideState::Persistent
        } else if r < ONSET_RATIO && self.monotone() {
            SideState::Growing
        } else {
            SideState::Mixed
        }
    }

    fn multi_count(&self) -> usize {
        self.multi.iter().filter(|&&m| m).count()
    }
}

fn side_profile(
    p: &TvSdpProblem,
    t_star: f64,
    sign: f64,
    window: f64,
) -> Result<SideProfile, ClassifyError> {
    let mut prof = SideProfile {
        times: Vec::new(),
        extents: Vec::new(),
        multi: Vec::new(),
    };
    for j in 1..=SIDE_PROBES {
        let t = t_star + sign * window * j as f64 / SIDE_PROBES as f64;
        let s = sample_at(p, t)?;
        prof.times.push(t);
        prof.extents.push(s.extent());
        prof.multi.push(s.is_multi());
    }
    Ok(prof)
}

fn face_at(p: &TvSdpProblem, t: f64, dirs: &[SymMat]) -> Result<FaceTest, ClassifyError> {
    let inst = p.instantiate(t).map_err(TraceError::from)?;
    let res = solve_optimal(&inst, None)?;
    two_level_face_test(&inst, res.p_star, dirs).map_err(|e| ClassifyError::Probe {
        t,
        reason: e.to_string(),
    })
}

/// Everything the decision procedure looks at for one event.
#[derive(Debug, Clone, PartialEq)]
pub struct EventProbes {
    pub t_star: f64,
    pub window: f64,
    pub face: FaceTest,
    pub before: SideProfile,
    pub after: SideProfile,
}

pub fn probe_event(
    p: &TvSdpProblem,
    ev: &Event,
    window: f64,
    dirs: &[SymMat],
) -> Result<EventProbes, ClassifyError> {
    let t = ev.t_star;
    let (ti, tf) = p.horizon();
    // Keep every probe strictly inside the open horizon.
    let room = (t - ti).min(tf - t) * 0.99;
    let window = window.min(room);
    Ok(EventProbes {
        t_star: t,
        window,
        face: face_at(p, t, dirs)?,
        before: side_profile(p, t, -1.0, window)?,
        after: side_profile(p, t, 1.0, window)?,
    })
}

/// Decision procedure on precomputed probes and the event's one-sided
/// derivatives.
pub fn decide(ev: &Event, probes: &EventProbes) -> PointType {
    let face = &probes.face;
    let (mut before, mut after) = (&probes.before, &probes.after);
    let (mut dl, mut dr) = (ev.left_derivative.as_ref(), ev.right_derivative.as_ref());
    let mut convention = SideConvention::Forward;
    let multi_like = |s: SideState| matches!(s, SideState::Persistent | SideState::Growing);
    if multi_like(before.state()) && after.state() == SideState::Single {
        convention = SideConvention::Reversed;
        std::mem::swap(&mut before, &mut after);
        std::mem::swap(&mut dl, &mut dr);
    }
    let multi_at = face.genuine;
    let face_ev = vec![
        Evidence::above("face range at t* (fine slack)", face.range_fine, FACE_TOL),
        Evidence::above("face range ratio fine/coarse", face.ratio, 0.5),
    ];
    let jump = match (dl, dr) {
        (Some(l), Some(r)) => {
            Some((l.sub(r).frobenius_norm(), JUMP_REL * (1.0 + l.frobenius_norm())))
        }
        _ => None,
    };
    let after_count = after.multi_count() as f64;
    let mut evidence = Vec::new();
    let label = match (after.state(), before.state()) {
        (SideState::Single, _) => {
            evidence.push(Evidence::at_most("multi-valued probes after t*", after_count, 0.0));
            if multi_at {
                evidence.extend(face_ev);
                Label::DiscontinuousIsolatedMultiple
            } else if let Some((j, thr)) = jump.filter(|(j, thr)| j > thr) {
                evidence.push(Evidence::above("one-sided derivative jump", j, thr));
                Label::NonDifferentiable
            } else {
                evidence.push(Evidence::below("genuine face at t*", 0.0, 0.5));
                if let Some((j, thr)) = jump {
                    evidence.push(Evidence::at_most("one-sided derivative jump", j, thr));
                }
                Label::Regular
            }
        }
        (SideState::Persistent, SideState::Single) => {
            evidence.push(Evidence::above("multi-valued probes after t*", after_count, 6.0));
            evidence.push(Evidence::above(
                "near/far face extent after t*",
                after.onset_ratio(),
                ONSET_RATIO,
            ));
            evidence.push(Evidence::at_most(
                "multi-valued probes before t*",
                before.multi_count() as f64,
                0.0,
            ));
            Label::DiscontinuousNonIsolatedMultiple
        }
        (SideState::Growing, b) if b == SideState::Single || b == SideState::Growing => {
            evidence.push(Evidence::below(
                "near/far face extent after t*",
                after.onset_ratio(),
                ONSET_RATIO,
            ));
            if b == SideState::Growing {
                evidence.push(Evidence::below(
                    "near/far face extent before t*",
                    before.onset_ratio(),
                    ONSET_RATIO,
                ));
            } else {
                evidence.push(Evidence::at_most(
                    "multi-valued probes before t*",
                    before.multi_count() as f64,
                    0.0,
                ));
            }
            Label::ContinuousBifurcation
        }
        _ => {
            evidence.push(Evidence::at_most("multi-valued probes after t*", after_count, 0.0));
            evidence.push(Evidence::above(
                "near/far face extent after t*",
                after.onset_ratio(),
                ONSET_RATIO,
            ));
            return PointType::unknown(evidence);
        }
    };
    PointType {
        label,
        evidence,
        side_convention: convention,
    }
}

/// Classifies one event with probes in `window` on each side.
pub fn classify_event(
    p: &TvSdpProblem,
    ev: &Event,
    window: f64,
) -> Result<PointType, ClassifyError> {
    let dirs = probe_directions(p.n(), PROBE_DIRECTIONS, 0);
    classify_event_with(p, ev, window, &dirs)
}

pub fn classify_event_with(
    p: &TvSdpProblem,
    ev: &Event,
    window: f64,
    dirs: &[SymMat],
) -> Result<PointType, ClassifyError> {
    let probes = probe_event(p, ev, window, dirs)?;
    Ok(decide(ev, &probes))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyOptions {
    pub trace: TraceOptions,
    /// Probe window; defaults to ten event resolutions.
    pub window: Option<f64>,
    /// Seed of the face-probe directions.
    pub seed: u64,
}

impl ClassifyOptions {
    pub fn new(trace: TraceOptions) -> Self {
        Self {
            trace,
            window: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledEvent {
    pub t: f64,
    pub point_type: PointType,
    /// Index into the tracer's events; `None` for an accumulation point
    /// that is not itself an event.
    pub event: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifiedTrajectory {
    pub samples: Vec<TrajectorySample>,
    pub events: Vec<Event>,
    /// Sorted by time.
    pub labeled_events: Vec<LabeledEvent>,
    pub summary: BTreeMap<Label, usize>,
    /// Samples with an invertible Jacobian, regular without further probing.
    pub regular_samples: usize,
    pub accumulations: Vec<Accumulation>,
    pub failure: Option<TraceFailure>,
    pub t_start: f64,
    pub t_end: f64,
    /// Horizon of the problem.
    pub horizon: (f64, f64),
}

impl ClassifiedTrajectory {
    /// Label of the labelled time nearest to `t` within `tol`; otherwise
    /// `Regular` if a sample within `tol` has an invertible Jacobian.
    pub fn label_at(&self, t: f64, tol: f64) -> Option<Label> {
        let nearest = self
            .labeled_events
            .iter()
            .filter(|e| (e.t - t).abs() <= tol)
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()));
        if let Some(e) = nearest {
            return Some(e.point_type.label);
        }
        self.samples
            .iter()
            .any(|s| (s.t - t).abs() <= tol && s.certificate.jacobian_nonsingular)
            .then_some(Label::Regular)
    }

    pub fn count(&self, label: Label) -> usize {
        self.summary.get(&label).copied().unwrap_or(0)
    }

    pub fn has_nonsingular_time(&self) -> bool {
        self.regular_samples > 0
    }

    /// Times labelled anything but `Regular`.
    pub fn irregular_times(&self) -> Vec<f64> {
        self.labeled_events
            .iter()
            .filter(|e| e.point_type.label != Label::Regular)
            .map(|e| e.t)
            .collect()
    }
}

/// Traces `p` and labels every event.
pub fn classify_trajectory(
    p: &TvSdpProblem,
    opts: &ClassifyOptions,
) -> Result<ClassifiedTrajectory, ClassifyError> {
    let report = trace(p, &opts.trace)?;
    let res = opts.trace.event_resolution;
    let window = opts.window.unwrap_or(WINDOW_FACTOR * res);
    let dirs = probe_directions(p.n(), PROBE_DIRECTIONS, opts.seed);
    let events = report.events;
    let times: Vec<f64> = events.iter().map(|e| e.t_star).collect();
    let mut labels: Vec<Result<PointType, ClassifyError>> = Vec::with_capacity(events.len());
    for (k, ev) in events.iter().enumerate() {
        let spacing = neighbour_spacing(&times, k);
        // Probes must not reach the neighbouring events.
        let w = window.min(0.4 * spacing);
        let outcome = if w < 2.0 * res {
            Err(ClassifyError::InsufficientResolution {
                t: ev.t_star,
                spacing,
            })
        } else {
            classify_event_with(p, ev, w, &dirs)
        };
        // Probe failures leave the event Unknown; bad data does not.
        if let Err(e @ ClassifyError::Trace(TraceError::Model(_))) = outcome {
            return Err(e);
        }
        labels.push(outcome);
    }
    let mut clusters = accumulate::find_clusters(&times, res, opts.trace.t_start, opts.trace.t_end);
    let mut labeled: Vec<LabeledEvent> = Vec::new();
    let mut member_of = vec![None; events.len()];
    let mut unresolved = vec![false; events.len()];
    for (c, cl) in clusters.iter().enumerate() {
        for (j, &k) in cl.members.iter().enumerate() {
            member_of[k] = Some(c);
            unresolved[k] = j >= cl.resolved_len;
        }
    }
    for (k, outcome) in labels.into_iter().enumerate() {
        let pt = match (outcome, member_of[k]) {
            (Ok(pt), None) => pt,
            (Ok(pt), Some(_)) if pt.label != Label::Unknown && !unresolved[k] => pt,
            (outcome, Some(c)) => accumulate::member_type(&clusters[c], outcome.err()),
            (Err(e), None) => PointType::unknown(vec![Evidence {
                check: format!("individual probes unavailable: {e}"),
                value: neighbour_spacing(&times, k),
                threshold: 5.0 * res,
                passed: false,
            }]),
        };
        labeled.push(LabeledEvent {
            t: times[k],
            point_type: pt,
            event: Some(k),
        });
    }
    for cl in &clusters {
        let pt = accumulate::limit_type(cl);
        match labeled
            .iter_mut()
            .find(|e| e.event.is_some() && (e.t - cl.limit).abs() <= 2.0 * res)
        {
            Some(e) => e.point_type = pt,
            None => labeled.push(LabeledEvent {
                t: cl.limit,
                point_type: pt,
                event: None,
            }),
        }
    }
    for cl in clusters.iter_mut() {
        let mut comp = BTreeMap::new();
        for &k in &cl.members {
            *comp.entry(labeled[k].point_type.label).or_insert(0) += 1;
        }
        cl.composition = comp.into_iter().collect();
    }
    labeled.sort_by(|a, b| a.t.total_cmp(&b.t));
    let mut summary = BTreeMap::new();
    for e in &labeled {
        *summary.entry(e.point_type.label).or_insert(0) += 1;
    }
    let regular_samples = report
        .samples
        .iter()
        .filter(|s| s.certificate.jacobian_nonsingular)
        .count();
    Ok(ClassifiedTrajectory {
        samples: report.samples,
        events,
        labeled_events: labeled,
        summary,
        regular_samples,
        accumulations: clusters,
        failure: report.failure,
        horizon: p.horizon(),
        t_start: opts.trace.t_start,
        t_end: opts.trace.t_end,
    })
}

fn neighbour_spacing(times: &[f64], k: usize) -> f64 {
    let l = if k > 0 { times[k] - times[k - 1] } else { f64::INFINITY };
    let r = times.get(k + 1).map_or(f64::INFINITY, |t| t - times[k]);
    l.min(r)
}

#[cfg(test)]
mod tests;
