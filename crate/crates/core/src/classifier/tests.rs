use super::*;
use crate::model::builtin;
use crate::tracer::EventKind;

fn profile(extents: &[f64]) -> SideProfile {
    SideProfile {
        times: (1..=extents.len()).map(|j| j as f64 * 1e-4).collect(),
        extents: extents.to_vec(),
        multi: extents.iter().map(|&e| e > FACE_TOL).collect(),
    }
}

fn single() -> SideProfile {
    profile(&[0.0; SIDE_PROBES])
}

fn face(genuine: bool) -> FaceTest {
    let (fine, coarse) = if genuine { (0.3, 0.31) } else { (1e-4, 1e-2) };
    FaceTest {
        range_coarse: coarse,
        range_fine: fine,
        ratio: fine / coarse,
        genuine,
    }
}

fn event_with(dl: Option<SymMat>, dr: Option<SymMat>) -> Event {
    let mut e = Event::new(-1e-5, 1e-5, 0.0, EventKind::SigmaMinDip, 1e-12);
    e.left_derivative = dl;
    e.right_derivative = dr;
    e
}

fn probes(face: FaceTest, before: SideProfile, after: SideProfile) -> EventProbes {
    EventProbes {
        t_star: 0.0,
        window: 7e-4,
        face,
        before,
        after,
    }
}

fn assert_evidence_consistent(pt: &PointType) {
    if pt.label != Label::Unknown {
        assert!(!pt.evidence.is_empty());
        assert!(pt.evidence.iter().all(|e| e.passed), "{:?}", pt.evidence);
    }
}

#[test]
fn side_states() {
    assert_eq!(single().state(), SideState::Single);
    assert_eq!(profile(&[1.0; 7]).state(), SideState::Persistent);
    let growing = [1e-3, 2e-3, 3e-3, 4e-3, 5e-3, 6e-3, 7e-3];
    assert_eq!(profile(&growing).state(), SideState::Growing);
    let flicker = [1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0];
    assert_eq!(profile(&flicker).state(), SideState::Mixed);
}

#[test]
fn decision_table() {
    let ones = SymMat::identity(2);
    let zero = SymMat::zeros(2);
    let growing = profile(&[1e-3, 2e-3, 3e-3, 4e-3, 5e-3, 6e-3, 7e-3]);
    let cases = [
        (event_with(None, None), probes(face(true), single(), single()), Label::DiscontinuousIsolatedMultiple),
        (
            event_with(Some(zero.clone()), Some(ones.clone())),
            probes(face(false), single(), single()),
            Label::NonDifferentiable,
        ),
        (
            event_with(Some(ones.clone()), Some(ones.clone())),
            probes(face(false), single(), single()),
            Label::Regular,
        ),
        (event_with(None, None), probes(face(false), single(), profile(&[1.0; 7])), Label::DiscontinuousNonIsolatedMultiple),
        (event_with(None, None), probes(face(false), single(), growing.clone()), Label::ContinuousBifurcation),
        (event_with(None, None), probes(face(false), growing.clone(), growing.clone()), Label::ContinuousBifurcation),
        (event_with(None, None), probes(face(false), profile(&[1.0; 7]), growing.clone()), Label::Unknown),
        (
            event_with(None, None),
            probes(face(false), single(), profile(&[1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0])),
            Label::Unknown,
        ),
    ];
    for (ev, pr, want) in cases {
        let pt = decide(&ev, &pr);
        assert_eq!(pt.label, want, "{pt:?}");
        assert_evidence_consistent(&pt);
    }
}

#[test]
fn multivalued_left_side_reverses_time() {
    let growing = profile(&[1e-3, 2e-3, 3e-3, 4e-3, 5e-3, 6e-3, 7e-3]);
    let pt = decide(&event_with(None, None), &probes(face(false), growing, single()));
    assert_eq!(pt.label, Label::ContinuousBifurcation);
    assert_eq!(pt.side_convention, SideConvention::Reversed);
    let pt = decide(&event_with(None, None), &probes(face(false), profile(&[1.0; 7]), single()));
    assert_eq!(pt.label, Label::DiscontinuousNonIsolatedMultiple);
    assert_eq!(pt.side_convention, SideConvention::Reversed);
}

#[test]
fn p1_events_classify() {
    let p = builtin("P1").unwrap();
    let report = trace(&p, &TraceOptions::new(-2.9, 1.9)).unwrap();
    let labels: Vec<Label> = report
        .events
        .iter()
        .map(|e| classify_event(&p, e, 1e-3).unwrap().label)
        .collect();
    assert_eq!(labels, [Label::NonDifferentiable, Label::DiscontinuousIsolatedMultiple]);
}

#[test]
fn p2_trajectory_and_audit() {
    let p = builtin("P2").unwrap();
    let c = classify_trajectory(&p, &ClassifyOptions::new(TraceOptions::new(-1.9, 0.9))).unwrap();
    assert_eq!(c.label_at(0.0, 1e-4), Some(Label::DiscontinuousNonIsolatedMultiple));
    assert_eq!(c.count(Label::Unknown), 0);
    let audit = taxonomy_audit(&c, true, true);
    assert!(!audit.passed);
    assert_eq!(audit.warnings.len(), 1);
    assert!(taxonomy_audit(&c, true, false).notes.iter().any(|n| n.contains("singular times")));
}

#[test]
fn lp1_regular_without_events() {
    let p = builtin("LP1").unwrap();
    let c = classify_trajectory(&p, &ClassifyOptions::new(TraceOptions::new(-0.9, 0.9))).unwrap();
    assert!(c.labeled_events.is_empty());
    assert_eq!(c.label_at(0.0, 1e-2), Some(Label::Regular));
    assert!(c.has_nonsingular_time());
}

#[test]
fn empty_report_passes_audit() {
    let c = ClassifiedTrajectory {
        samples: Vec::new(),
        events: Vec::new(),
        labeled_events: Vec::new(),
        summary: BTreeMap::new(),
        regular_samples: 0,
        accumulations: Vec::new(),
        failure: None,
        t_start: 0.0,
        t_end: 1.0,
        horizon: (-1.0, 2.0),
    };
    let a = taxonomy_audit(&c, true, true);
    assert!(a.passed && a.warnings.is_empty());
    assert_eq!(a.table.len(), Label::ALL.len());
    assert!(a.table.iter().all(|r| r.count == 0));
    assert!(a.render_table().contains("IrregularAccumulation"));
}
