use super::*;
use crate::model::builtin;

fn p1() -> TvSdpProblem {
    builtin("P1").unwrap()
}

/// Off-diagonal entries `(x, y, z)` of a unit-diagonal 3×3 matrix.
fn xyz(x: &SymMat) -> [f64; 3] {
    [x.get(0, 1), x.get(0, 2), x.get(1, 2)]
}

fn p1_closed_form(t: f64) -> [f64; 3] {
    [-t / 2.0, -t / 2.0, t * t / 2.0 - 1.0]
}

fn max_diff(a: &SymMat, b: &SymMat) -> f64 {
    a.sub(b).frobenius_norm()
}

fn sym(rows: [[f64; 3]; 3]) -> SymMat {
    SymMat::from_rows(&rows.map(|r| r.to_vec())).unwrap()
}

#[test]
fn predictor_from_one_lands_within_dt_squared() {
    let p = p1();
    let s = sample_at(&p, 1.0).unwrap();
    assert!(s.certificate.jacobian_nonsingular);
    let inst = p.instantiate(1.1).unwrap();
    let w = predict(&s, &inst, 0.1).unwrap();
    let got = xyz(&w.x);
    let want = p1_closed_form(1.1);
    assert!((got[0] - want[0]).abs() < 1e-7, "{got:?}");
    assert!((got[1] - want[1]).abs() < 1e-7, "{got:?}");
    assert!((got[2] - want[2]).abs() <= 0.1 * 0.1, "{got:?}");
}

#[test]
fn predictor_is_constant_on_the_flat_segment() {
    let p = p1();
    let s = sample_at(&p, -2.5).unwrap();
    let inst = p.instantiate(-2.1).unwrap();
    let w = predict(&s, &inst, 0.4).unwrap();
    let ones = SymMat::from_fn(3, |_, _| 1.0);
    assert!(max_diff(&w.x, &ones) < 1e-7, "{:?}", w.x);
}

#[test]
fn predictor_refuses_singular_time() {
    let p = p1();
    let s = sample_at(&p, 0.0).unwrap();
    assert!(!s.certificate.jacobian_nonsingular);
    let inst = p.instantiate(0.1).unwrap();
    assert!(matches!(predict(&s, &inst, 0.1), Err(TraceError::SingularJacobian { .. })));
}

#[test]
fn predictor_error_is_second_order() {
    let p = p1();
    let s = sample_at(&p, 0.5).unwrap();
    let err = |h: f64| {
        let inst = p.instantiate(0.5 + h).unwrap();
        let g = predict(&s, &inst, h).unwrap();
        let c = correct(&inst, &g).unwrap();
        max_diff(&g.x, &c.point.x)
    };
    let (e1, e2) = (err(0.1), err(0.05));
    assert!(e1 / e2 >= 3.0, "{e1} / {e2}");
}

#[test]
fn corrector_converges_from_prediction() {
    let p = p1();
    let s = sample_at(&p, 1.0).unwrap();
    let inst = p.instantiate(1.1).unwrap();
    let c = correct(&inst, &predict(&s, &inst, 0.1).unwrap()).unwrap();
    assert!(c.iterations <= 3, "{} steps", c.iterations);
    let cold = solve(&inst, None).unwrap();
    assert!(max_diff(&c.point.x, &cold.point.x) < 1e-7);
}

#[test]
fn corrector_keeps_exact_optimum() {
    let p = p1();
    let inst = p.instantiate(0.7).unwrap();
    let opt = solve(&inst, None).unwrap().point;
    let c = correct(&inst, &opt).unwrap();
    assert!(c.iterations <= 1);
    assert!(max_diff(&c.point.x, &opt.x) < 1e-12);
    assert!(max_diff(&c.point.z, &opt.z) < 1e-12);
}

#[test]
fn corrector_reports_divergence_far_from_the_path() {
    let p = p1();
    let inst = p.instantiate(0.05).unwrap();
    let far = PrimalDualPoint::evaluate(
        &inst,
        SymMat::from_fn(3, |i, j| if i == j { 1.0 } else { 2.0 }),
        vec![1.0; 3],
        SymMat::from_fn(3, |i, j| if i == j { -1.0 } else { 0.0 }),
    );
    let r = correct(&inst, &far);
    assert!(matches!(r, Err(TraceError::CorrectionDiverged { .. })), "{r:?}");
}

#[test]
fn one_sided_derivatives_at_minus_two() {
    let p = p1();
    let left = one_sided_derivative(&p, -2.0, Side::Left, DERIV_DELTA).unwrap();
    assert!(left.frobenius_norm() < 1e-3, "{left:?}");
    let right = one_sided_derivative(&p, -2.0, Side::Right, DERIV_DELTA).unwrap();
    let want = sym([[0.0, -0.5, -0.5], [-0.5, 0.0, -2.0], [-0.5, -2.0, 0.0]]);
    assert!(max_diff(&right, &want) < 1e-3, "{right:?}");
}

#[test]
fn dual_right_derivative_at_minus_two() {
    let d = builtin("D1").unwrap();
    let right = one_sided_derivative(&d, -2.0, Side::Right, DERIV_DELTA).unwrap();
    let want = sym([[-2.0, 0.5, 0.5], [0.5, 0.0, 0.0], [0.5, 0.0, 0.0]]);
    assert!(max_diff(&right, &want) < 1e-3, "{right:?}");
}

#[test]
fn derivative_estimators_agree_on_smooth_segment() {
    let est = one_sided_estimates(&p1(), 1.0, Side::Right, DERIV_DELTA).unwrap();
    assert!(est.disagreement().unwrap() < ESTIMATOR_TOL);
}

#[test]
fn derivative_on_multivalued_side_is_refused() {
    let p = builtin("P2").unwrap();
    assert!(matches!(
        one_sided_derivative(&p, 0.0, Side::Right, 1e-3),
        Err(TraceError::NotSingleValued { .. })
    ));
}

#[test]
fn p1_has_exactly_two_events() {
    let r = trace(&p1(), &TraceOptions::new(-2.9, 1.9)).unwrap();
    assert!(r.failure.is_none());
    assert_eq!(r.events.len(), 2, "{:?}", r.events);
    let (a, b) = (&r.events[0], &r.events[1]);
    assert!((a.t_star + 2.0).abs() < 1e-4);
    assert!(a.has(EventKind::DerivativeJump) && a.has(EventKind::ComplementarityLoss));
    assert!(b.t_star.abs() < 1e-4);
    assert!(b.has(EventKind::UniquenessLoss));
    for e in &r.events {
        assert!(e.t_lo <= e.t_star && e.t_star <= e.t_hi);
    }
    assert!(r.samples.windows(2).all(|w| w[0].t < w[1].t));
    for s in &r.samples {
        if s.certificate.jacobian_nonsingular {
            assert!(s.dxdt.is_some(), "t = {}", s.t);
        }
    }
}

#[test]
fn p1_event_at_minus_two_carries_derivatives() {
    let r = trace(&p1(), &TraceOptions::new(-2.9, -1.0)).unwrap();
    assert_eq!(r.events.len(), 1);
    let e = &r.events[0];
    let l = e.left_derivative.as_ref().unwrap();
    let rd = e.right_derivative.as_ref().unwrap();
    assert!(l.frobenius_norm() < 1e-3);
    assert!((rd.get(1, 2) + 2.0).abs() < 1e-3);
}

#[test]
fn traced_samples_match_cold_solves() {
    let p = p1();
    let r = trace(&p, &TraceOptions::new(0.2, 1.9)).unwrap();
    assert!(r.events.is_empty());
    for s in r.samples.iter().step_by(7) {
        let cold = sample_at(&p, s.t).unwrap();
        assert!(max_diff(&s.point.x, &cold.point.x) < 1e-7, "t = {}", s.t);
    }
}

#[test]
fn p2_single_event_with_multiplicity_to_the_right() {
    let r = trace(&builtin("P2").unwrap(), &TraceOptions::new(-1.9, 0.9)).unwrap();
    assert_eq!(r.events.len(), 1, "{:?}", r.events);
    let t = r.events[0].t_star;
    assert!(t.abs() < 1e-4);
    for s in r.samples.iter().filter(|s| s.t > r.events[0].t_hi) {
        assert!(s.is_multi() && s.multiplicity_range.unwrap() > 0.0, "t = {}", s.t);
    }
}

#[test]
fn p3_and_d3_mirror_each_other() {
    let primal = trace(&builtin("P3").unwrap(), &TraceOptions::new(-0.9, 0.9)).unwrap();
    let dual = trace(&builtin("D3").unwrap(), &TraceOptions::new(-0.9, 0.9)).unwrap();
    assert_eq!(primal.events.len(), 1);
    assert_eq!(dual.events.len(), 1);
    let far = |r: &TraceReport, left: bool| {
        r.samples
            .iter()
            .filter(|s| if left { s.t < -0.01 } else { s.t > 0.01 })
            .map(TrajectorySample::is_multi)
            .collect::<Vec<_>>()
    };
    assert!(far(&primal, true).iter().all(|&m| m));
    assert!(far(&primal, false).iter().all(|&m| !m));
    assert!(far(&dual, true).iter().all(|&m| !m));
    assert!(far(&dual, false).iter().all(|&m| m));
}

#[test]
fn invalid_options_are_rejected() {
    let p = p1();
    for o in [
        TraceOptions::new(1.0, 0.5),
        TraceOptions::new(-3.5, 0.0),
        TraceOptions::new(0.0, 1.0).with_resolution(0.0),
    ] {
        assert!(matches!(trace(&p, &o), Err(TraceError::InvalidOptions(_))));
    }
}
