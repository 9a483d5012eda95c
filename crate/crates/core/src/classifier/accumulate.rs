use serde::Serialize;

use super::{
    ClassifyError, Evidence, Label, PointType, SideConvention, ACCUMULATION_MIN_EVENTS,
    ACCUMULATION_RATIO,
};

/// Gap, in resolutions, below which the tracer no longer separates events
/// reliably; a cluster reaching it is taken to end at its limit.
const RESOLVED_GAPS: f64 = 20.0;
/// Tail gaps up to this many resolutions stay in the cluster even when the
/// ratio test fails (event spacing there is dominated by sampling).
const TAIL_GAPS: f64 = 100.0;

/// A run of events whose spacing shrinks geometrically towards `limit`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Accumulation {
    pub limit: f64,
    /// Event indices, ordered towards the limit.
    pub members: Vec<usize>,
    /// Length of the leading run that passes the ratio test.
    pub run_len: usize,
    /// Members from this position on come after the first growing gap;
    /// events between them are missing and their probe windows are not
    /// known to be free of irregular times.
    pub resolved_len: usize,
    pub max_ratio: f64,
    /// Smallest gap between consecutive members.
    pub min_gap: f64,
    /// `limit` is the last member rather than a geometric extrapolation.
    pub resolution_limited: bool,
    /// Labels of members classified on their own, filled in by the caller.
    pub composition: Vec<(Label, usize)>,
}

pub(super) fn find_clusters(times: &[f64], res: f64, t_start: f64, t_end: f64) -> Vec<Accumulation> {
    let mut out = Vec::new();
    let fwd: Vec<usize> = (0..times.len()).collect();
    let bwd: Vec<usize> = (0..times.len()).rev().collect();
    for order in [fwd, bwd] {
        let mut j = 0;
        while j + ACCUMULATION_MIN_EVENTS <= order.len() {
            match cluster_from(times, &order, j, res, t_start, t_end) {
                Some((cl, next)) => {
                    out.push(cl);
                    j = next;
                }
                None => j += 1,
            }
        }
    }
    // A cluster read in one direction can contain a spurious shorter run
    // read in the other; keep the larger of overlapping clusters.
    out.sort_by(|a, b| b.members.len().cmp(&a.members.len()));
    let mut kept: Vec<Accumulation> = Vec::new();
    for cl in out {
        if !kept.iter().any(|k| k.members.iter().any(|m| cl.members.contains(m))) {
            kept.push(cl);
        }
    }
    kept.sort_by(|a, b| a.limit.total_cmp(&b.limit));
    kept
}

fn cluster_from(
    times: &[f64],
    order: &[usize],
    j0: usize,
    res: f64,
    t_start: f64,
    t_end: f64,
) -> Option<(Accumulation, usize)> {
    let gap = |j: usize| (times[order[j + 1]] - times[order[j]]).abs();
    let last = order.len() - 1;
    let mut je = j0 + 1;
    let mut max_ratio = 0.0f64;
    while je < last {
        let r = gap(je) / gap(je - 1);
        if r > ACCUMULATION_RATIO {
            break;
        }
        max_ratio = max_ratio.max(r);
        je += 1;
    }
    let run_len = je - j0 + 1;
    if run_len < ACCUMULATION_MIN_EVENTS {
        return None;
    }
    let run_gap = gap(je - 1);
    let run_ratio = run_gap / gap(je - 2);
    let mut jt = je;
    let mut tail_gap = run_gap;
    while jt < last {
        let g = gap(jt);
        if g > (1.5 * tail_gap).max(TAIL_GAPS * res) {
            break;
        }
        tail_gap = tail_gap.min(g);
        jt += 1;
    }
    let members: Vec<usize> = order[j0..=jt].to_vec();
    let mut jr = je;
    while jr < jt && gap(jr) <= 1.1 * gap(jr - 1) {
        jr += 1;
    }
    let min_gap = (j0..jt).map(gap).fold(f64::INFINITY, f64::min);
    let sign = (times[order[je]] - times[order[je - 1]]).signum();
    let (limit, resolution_limited) = if min_gap <= RESOLVED_GAPS * res {
        (times[order[jt]], true)
    } else {
        let t = times[order[je]] + sign * run_gap * run_ratio / (1.0 - run_ratio);
        if !(t_start..=t_end).contains(&t) {
            return None;
        }
        (t, false)
    };
    Some((
        Accumulation {
            limit,
            members,
            run_len,
            resolved_len: jr - j0 + 1,
            max_ratio,
            min_gap,
            resolution_limited,
            composition: Vec::new(),
        },
        jt + 1,
    ))
}

fn cluster_evidence(cl: &Accumulation) -> Vec<Evidence> {
    vec![
        Evidence::above(
            "events in shrinking run",
            cl.run_len as f64,
            (ACCUMULATION_MIN_EVENTS - 1) as f64,
        ),
        Evidence::at_most("largest consecutive gap ratio", cl.max_ratio, ACCUMULATION_RATIO),
    ]
}

pub(super) fn limit_type(cl: &Accumulation) -> PointType {
    PointType {
        label: Label::IrregularAccumulation,
        evidence: cluster_evidence(cl),
        side_convention: SideConvention::Forward,
    }
}

/// Label of a cluster member that could not be classified on its own: its
/// probe window cannot avoid the neighbouring events of the accumulation.
pub(super) fn member_type(cl: &Accumulation, err: Option<ClassifyError>) -> PointType {
    let mut evidence = cluster_evidence(cl);
    if let Some(ClassifyError::InsufficientResolution { spacing, .. }) = err {
        evidence.push(Evidence::above("spacing to neighbouring event", spacing, 0.0));
    }
    limit_type(cl).with_evidence(evidence)
}

impl PointType {
    fn with_evidence(mut self, evidence: Vec<Evidence>) -> Self {
        self.evidence = evidence;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_ladder_extrapolates_to_zero() {
        let times: Vec<f64> = (1..=12).rev().map(|k| 1.0 / k as f64).collect();
        let cl = find_clusters(&times, 1e-4, -1.0, 1.0);
        assert_eq!(cl.len(), 1);
        assert!(!cl[0].resolution_limited);
        assert!(cl[0].limit.abs() < 0.1, "limit {}", cl[0].limit);
        assert_eq!(cl[0].members.len(), 12);
    }

    #[test]
    fn geometric_ladder_limit_is_exact() {
        let times: Vec<f64> = (0..8).map(|k| 1.0 + 0.5f64.powi(k)).collect();
        let cl = find_clusters(&times, 1e-6, 0.0, 3.0);
        assert_eq!(cl.len(), 1);
        assert!((cl[0].limit - 1.0).abs() < 1e-12);
    }

    #[test]
    fn even_spacing_is_no_cluster() {
        let times: Vec<f64> = (0..10).map(|k| k as f64 * 0.1).collect();
        assert!(find_clusters(&times, 1e-4, 0.0, 1.0).is_empty());
    }

    #[test]
    fn three_events_are_not_enough() {
        assert!(find_clusters(&[0.0, 0.5, 0.75], 1e-4, -1.0, 1.0).is_empty());
    }

    #[test]
    fn dense_tail_ends_at_last_member() {
        let mut times: Vec<f64> = (0..6).map(|k| -0.5f64.powi(k)).collect();
        times.extend([-0.02, -0.019, -0.0185]);
        let cl = find_clusters(&times, 1e-4, -1.0, 1.0);
        assert_eq!(cl.len(), 1);
        assert!(cl[0].resolution_limited);
        assert_eq!(cl[0].limit, -0.0185);
        assert_eq!(cl[0].resolved_len, cl[0].members.len());
    }

    #[test]
    fn growing_tail_gap_ends_the_resolved_part() {
        let mut times: Vec<f64> = (0..6).map(|k| -0.5f64.powi(k)).collect();
        times.extend([-0.02, -0.019, -0.0185, -0.015, -0.0148]);
        let cl = find_clusters(&times, 1e-3, -1.0, 1.0);
        assert_eq!(cl.len(), 1);
        assert_eq!(cl[0].members.len(), 11);
        assert_eq!(cl[0].resolved_len, 9);
    }
}
