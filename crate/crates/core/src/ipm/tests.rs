use super::*;
use crate::model::builtin;

fn solve_at(name: &str, t: f64) -> SolveResult {
    let inst = builtin(name).unwrap().instantiate(t).unwrap();
    solve(&inst, None).unwrap()
}

fn assert_optimal_invariants(r: &SolveResult) {
    assert!(r.is_optimal(), "{:?} at t = {}", r.status, r.point.t);
    let p = &r.point;
    assert!(p.gap <= 1e-9 * (1.0 + r.p_star.abs()));
    assert!(p.gap >= -1e-10);
    assert!(p.residual_primal <= 1e-9 && p.residual_dual <= 1e-9);
    assert!((r.p_star - r.d_star).abs() <= 1e-8 * (1.0 + r.p_star.abs()));
    assert!(p.is_psd(1e-8));
    let comp = p.x.jordan(&p.z).frobenius_norm();
    assert!(comp <= 1e-8 * (1.0 + p.x.frobenius_norm() * p.z.frobenius_norm()));
}

#[test]
fn p1_at_one_matches_closed_form() {
    let r = solve_at("P1", 1.0);
    assert_optimal_invariants(&r);
    let x = &r.point.x;
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        assert!((x.get(i, j) + 0.5).abs() < 1e-6, "{x:?}");
    }
    assert!((r.p_star + 1.5).abs() < 1e-8);
}

#[test]
fn p1_before_minus_two_sits_at_all_ones() {
    let r = solve_at("P1", -2.5);
    assert_optimal_invariants(&r);
    for i in 0..3 {
        for j in 0..3 {
            assert!((r.point.x.get(i, j) - 1.0).abs() < 1e-6);
        }
    }
    assert!((r.p_star + 4.0).abs() < 1e-8);
}

#[test]
fn d1_at_one_is_half_ones() {
    let r = solve_at("D1", 1.0);
    assert_optimal_invariants(&r);
    for i in 0..3 {
        for j in 0..3 {
            assert!((r.point.x.get(i, j) - 0.5).abs() < 1e-6);
        }
    }
    // The P1 dual slack at t = 1 is the same matrix.
    let p1 = solve_at("P1", 1.0);
    assert!(p1.point.z.sub(&r.point.x).max_abs() < 1e-6);
}

#[test]
fn p1_optimal_value_on_grid() {
    let p = builtin("P1").unwrap();
    for k in 0..50 {
        let t = -1.98 + 3.96 * k as f64 / 49.0;
        if t.abs() < 1e-3 {
            continue;
        }
        let r = solve(&p.instantiate(t).unwrap(), None).unwrap();
        assert_optimal_invariants(&r);
        assert!((r.p_star - (-t * t / 2.0 - 1.0)).abs() <= 1e-7, "t = {t}");
    }
}

#[test]
fn all_fixtures_solve_across_horizon() {
    for name in crate::model::builtin_names() {
        let p = builtin(name).unwrap();
        let (lo, hi) = p.horizon();
        for k in 1..10 {
            let t = lo + (hi - lo) * k as f64 / 10.0;
            let r = solve(&p.instantiate(t).unwrap(), None).unwrap();
            assert!(
                r.is_optimal(),
                "{name} at {t}: {:?} after {}",
                r.status,
                r.iterations
            );
            assert!(r.point.is_psd(1e-8));
        }
    }
}

#[test]
fn warm_start_agrees_with_cold_and_saves_iterations() {
    let p = builtin("P1").unwrap();
    let base = solve(&p.instantiate(0.7).unwrap(), None).unwrap();
    let inst = p.instantiate(0.705).unwrap();
    let cold = solve(&inst, None).unwrap();
    let warm = solve(&inst, Some(&base.point)).unwrap();
    assert_optimal_invariants(&warm);
    assert!((warm.p_star - cold.p_star).abs() <= 1e-9);
    assert!(
        warm.iterations < cold.iterations,
        "{} vs {}",
        warm.iterations,
        cold.iterations
    );
}

#[test]
fn warm_start_dimension_checked() {
    let base = solve_at("P1", 0.5);
    let inst = builtin("P2").unwrap().instantiate(0.5).unwrap();
    assert!(matches!(
        solve(&inst, Some(&base.point)),
        Err(IpmError::DimensionMismatch(_))
    ));
}

#[test]
fn infeasible_instance_is_not_reported_optimal() {
    // X11 = -1 has no PSD solution.
    let inst = ProblemInstance::new(
        0.0,
        vec![SymMat::unit(2, 0, 0)],
        vec![-1.0],
        SymMat::identity(2),
    );
    let r = solve(&inst, None).unwrap();
    assert!(!r.is_optimal());
    assert!(r.into_optimal().is_err());
}

#[test]
fn face_probe_p1_at_zero_spans_the_segment() {
    let r = solve_at("P1", 0.0);
    let inst = builtin("P1").unwrap().instantiate(0.0).unwrap();
    // ⟨G, X⟩ = X12 = x, which ranges over [-1, 1] on the optimal face a + b = 0.
    let g = SymMat::unit(3, 0, 1);
    let hi = solve_face_probe(&inst, r.p_star, &g, Sense::Max).unwrap();
    let lo = solve_face_probe(&inst, r.p_star, &g, Sense::Min).unwrap();
    assert!((hi - lo - 2.0).abs() < 1e-3, "{lo} {hi}");
    let m = face_extent(&inst, &r.point.x).unwrap();
    assert!(m.is_multi(), "{m:?}");
    let test = two_level_face_test(&inst, r.p_star, &probe_directions(3, 2, 1)).unwrap();
    assert!(test.genuine, "{test:?}");
}

#[test]
fn unique_solution_has_no_face() {
    let r = solve_at("P1", 1.0);
    let inst = builtin("P1").unwrap().instantiate(1.0).unwrap();
    let m = face_extent(&inst, &r.point.x).unwrap();
    assert_eq!(m.kernel_dim, 0);
    assert!(!m.is_multi());
    // The relaxed sublevel set is only √ε wide around a curved boundary.
    let test = two_level_face_test(&inst, r.p_star, &probe_directions(3, 2, 1)).unwrap();
    assert!(!test.genuine, "{test:?}");
    assert!(test.range_fine < 1e-2 && test.ratio < 0.5);
}

#[test]
fn p3_face_probe_matches_sampled_face() {
    let t = -0.5;
    let inst = builtin("P3").unwrap().instantiate(t).unwrap();
    let r = solve(&inst, None).unwrap();
    assert!(r.p_star.abs() < 1e-8);
    let g = SymMat::from_fn(4, |i, j| {
        if (i, j) == (2, 3) || (i, j) == (3, 2) {
            1.0
        } else {
            0.0
        }
    });
    let range = probe_range(&inst, r.p_star, &g, FACE_EPS_REL).unwrap();
    // Oracle: with X11 = X12 = 0 the face is the set of PSD
    // [[1, a, b], [a, q, c], [b, c, q]] with q = -t/2; sample (a, b, c) and
    // keep the extreme c with all principal minors nonnegative.
    let q = -t / 2.0;
    let (mut cmin, mut cmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let steps = 100;
    for ia in 0..=steps {
        for ib in 0..=steps {
            for ic in 0..=steps {
                let a = -q.sqrt() + 2.0 * q.sqrt() * ia as f64 / steps as f64;
                let b = -q.sqrt() + 2.0 * q.sqrt() * ib as f64 / steps as f64;
                let c = -q + 2.0 * q * ic as f64 / steps as f64;
                let minors = [q - a * a, q - b * b, q * q - c * c];
                let det = q * q - c * c - a * (a * q - b * c) + b * (a * c - b * q);
                if minors.iter().all(|&v| v >= -1e-12) && det >= -1e-12 {
                    cmin = cmin.min(c);
                    cmax = cmax.max(c);
                }
            }
        }
    }
    let oracle = 2.0 * (cmax - cmin);
    // The ε-relaxation lets X12 reach √ε, which widens the range by O(√ε).
    assert!((range - oracle).abs() < 5e-3, "{range} vs {oracle}");
}
