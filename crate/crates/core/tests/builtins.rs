use proptest::prelude::*;
use tvsdp::ipm::solve;
use tvsdp::kkt::{certify, residual};
use tvsdp::model::{builtin, builtin_names, check_assumptions};
use tvsdp::symlin::eig;
use tvsdp::tracer::CERT_TOL;

#[test]
fn every_builtin_satisfies_licq_and_continuity() {
    for name in builtin_names() {
        let r = check_assumptions(&builtin(name).unwrap(), 50).unwrap();
        assert!(r.licq_ok(), "{name}: LICQ");
        assert!(r.continuity_ok(), "{name}: continuity");
    }
}

/// Where the data pin the feasible set to a lower-dimensional slice, there is
/// no interior point; everywhere else strict feasibility holds.
#[test]
fn strict_feasibility_fails_only_where_the_feasible_set_degenerates() {
    let vanishes = |t: f64| (std::f64::consts::PI / t).sin().abs() < 1e-9;
    let degenerate = |name: &str, t: f64| match name {
        "P4" | "LP5" => t <= 0.0,
        "P5" => t <= 0.0 || vanishes(t),
        "LP6" => t >= 0.0 || vanishes(t),
        _ => false,
    };
    for name in builtin_names() {
        let r = check_assumptions(&builtin(name).unwrap(), 50).unwrap();
        for s in &r.feasibility {
            assert_eq!(
                s.strictly_feasible(),
                !degenerate(name, s.t),
                "{name} at t = {}: {:?}",
                s.t,
                s.margins
            );
        }
    }
}

#[test]
fn polynomial_flag_matches_the_data() {
    for name in ["P1", "P2", "P3", "D1", "D3"] {
        assert!(builtin(name).unwrap().data_is_polynomial(), "{name}");
    }
    for name in ["P4", "P5"] {
        assert!(!builtin(name).unwrap().data_is_polynomial(), "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solutions_are_feasible_and_optimal(k in 0usize..13, s in 0.02f64..0.98) {
        let name = builtin_names()[k];
        let p = builtin(name).unwrap();
        let (lo, hi) = p.horizon();
        let inst = p.instantiate(lo + s * (hi - lo)).unwrap();
        let sol = solve(&inst, None).unwrap();
        let pt = &sol.point;
        prop_assert!(residual(&inst, pt).unwrap().max_block_norm() <= 1e-7);
        prop_assert!(eig(&pt.x).unwrap().min_eigenvalue() >= -1e-8);
        prop_assert!(eig(&pt.z).unwrap().min_eigenvalue() >= -1e-8);
        prop_assert!((sol.p_star - sol.d_star).abs() <= 1e-7 * (1.0 + sol.p_star.abs()));
        let c = certify(&inst, pt, CERT_TOL).unwrap();
        prop_assert!(c.rank_x + c.rank_z <= inst.n());
        if c.jacobian_nonsingular {
            prop_assert!(c.is_regular(), "{name}: {c:?}");
        }
    }
}
