//! Built-in example problems.
//!
//! LMI-constrained examples treat the LMI matrix itself as the variable `X`
//! and pin its fixed entries with equality constraints. Scalar LPs become
//! 2×2 diagonal SDPs: one linear equality in the two diagonal entries plus
//! `X₁₂ = 0`.

use super::{ModelError, TvSdpProblem};
use crate::timefn::{parse_expr, TimeExpr, TimeMat};

const NAMES: [&str; 13] = [
    "P1", "P2", "P3", "P4", "P5", "D1", "D3", "LP1", "LP2", "LP3", "LP4", "LP5", "LP6",
];

pub fn builtin_names() -> &'static [&'static str] {
    &NAMES
}

fn e(src: &str) -> TimeExpr {
    parse_expr(src).expect("built-in expression parses")
}

/// Matrix with the listed upper-triangle entries, zero elsewhere.
fn mat(n: usize, entries: &[(usize, usize, &str)]) -> TimeMat {
    let mut m = TimeMat::zeros(n);
    for &(i, j, src) in entries {
        m.set(i, j, e(src));
    }
    m
}

/// `(E_ij + E_ji)/2`, so that `⟨pick(i, j), X⟩ = X_ij`.
fn pick(n: usize, i: usize, j: usize) -> TimeMat {
    mat(n, &[(i, j, if i == j { "1" } else { "1/2" })])
}

fn problem(
    name: &str,
    rows: Vec<(TimeMat, &str)>,
    c: TimeMat,
    horizon: (f64, f64),
    notes: &str,
) -> TvSdpProblem {
    let (a, b): (Vec<_>, Vec<_>) = rows.into_iter().map(|(m, rhs)| (m, e(rhs))).unzip();
    TvSdpProblem::new(name, a, b, c, horizon)
        .expect("built-in problem is well formed")
        .with_notes(notes)
}

/// Objective `t·x + t·y + z` on the Cayley spectrahedron coordinates
/// `x = X₁₂, y = X₁₃, z = X₂₃`.
fn cayley_objective(n: usize) -> TimeMat {
    mat(n, &[(0, 1, "t/2"), (0, 2, "t/2"), (1, 2, "1/2")])
}

const F_HALF: &str = "piecewise(t > 0: t*sin(pi/t)/2, else: 0)";
const F_HALF_NEG: &str = "piecewise(t > 0: -t*sin(pi/t)/2, else: 0)";
const G: &str = "piecewise(t > 0: 2*t, else: 0)";
const TWO_H: &str = "piecewise(t > 0: 2*t*sin(pi/t)^2, else: 0)";

pub fn builtin(name: &str) -> Result<TvSdpProblem, ModelError> {
    Ok(match name {
        "P1" => problem(
            "P1",
            (0..3).map(|i| (pick(3, i, i), "1")).collect(),
            cayley_objective(3),
            (-3.0, 2.0),
            "min t*x + t*y + z over the unit-diagonal 3x3 spectrahedron",
        ),
        "D1" => problem(
            "D1",
            vec![
                (pick(3, 0, 1), "t/2"),
                (pick(3, 0, 2), "t/2"),
                (pick(3, 1, 2), "1/2"),
            ],
            mat(3, &[(0, 0, "1"), (1, 1, "1"), (2, 2, "1")]),
            (-3.0, 2.0),
            "dual of P1 as min trace(W), W = [[-a, t/2, t/2], [t/2, -b, 1/2], [t/2, 1/2, -c]]",
        ),
        "P2" => {
            let mut rows: Vec<(TimeMat, &str)> = (0..3).map(|i| (pick(4, i, i), "1")).collect();
            rows.extend((0..3).map(|i| (pick(4, i, 3), "0")));
            rows.push((
                mat(
                    4,
                    &[(3, 3, "1"), (0, 1, "-1/2"), (0, 2, "-1/2"), (1, 2, "-1/2")],
                ),
                "1",
            ));
            problem(
                "P2",
                rows,
                cayley_objective(4),
                (-2.0, 1.0),
                "P1 bordered by X44 = 1 + x + y + z",
            )
        }
        "P3" => problem(
            "P3",
            vec![
                (mat(4, &[(3, 3, "1"), (2, 2, "-1")]), "0"),
                (pick(4, 1, 1), "1"),
                (mat(4, &[(0, 1, "1"), (2, 2, "1"), (3, 3, "1")]), "-t"),
            ],
            mat(4, &[(0, 0, "1")]),
            (-1.0, 1.0),
            "min X11 s.t. X44 - X33 = 0, X22 = 1, 2 X12 + X33 + X44 = -t",
        ),
        "D3" => {
            let mut rows = vec![(pick(4, 0, 0), "1")];
            rows.extend(
                [(0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
                    .into_iter()
                    .map(|(i, j)| (pick(4, i, j), "0")),
            );
            rows.push((mat(4, &[(2, 2, "1"), (3, 3, "1"), (0, 1, "-1")]), "0"));
            problem(
                "D3",
                rows,
                mat(4, &[(1, 1, "1"), (0, 1, "-t/2")]),
                (-1.0, 1.0),
                "dual of P3 as min W22 - t W12 over W = [[1, -z, 0, 0], [-z, -y, 0, 0], [0, 0, -x-z, 0], [0, 0, 0, x-z]]",
            )
        }
        "P4" | "P5" => {
            let mut rows: Vec<(TimeMat, &str)> = (0..3).map(|i| (pick(5, i, i), "1")).collect();
            for i in 0..3 {
                for j in 3..5 {
                    rows.push((pick(5, i, j), "0"));
                }
            }
            let (diag, c, notes) = if name == "P4" {
                (
                    G,
                    mat(5, &[(0, 1, F_HALF), (0, 2, F_HALF_NEG), (1, 2, "1/2")]),
                    "min f(t)(x - y) + z with |x - y| <= g(t) appended as a 2x2 block",
                )
            } else {
                (
                    TWO_H,
                    mat(5, &[(1, 2, "1/2")]),
                    "min z with |x - y| <= 2h(t) appended as a 2x2 block",
                )
            };
            rows.push((pick(5, 3, 3), diag));
            rows.push((pick(5, 4, 4), diag));
            rows.push((mat(5, &[(3, 4, "1/2"), (0, 1, "-1/2"), (0, 2, "1/2")]), "0"));
            problem(name, rows, c, (-1.0, 1.2), notes)
        }
        "LP1" | "LP2" => problem(
            name,
            vec![
                (
                    mat(2, &[(0, 0, "1"), (1, 1, "-1")]),
                    if name == "LP1" { "1 + t" } else { "abs(t)" },
                ),
                (pick(2, 0, 1), "0"),
            ],
            mat(2, &[(0, 0, "1")]),
            (-1.0, 1.0),
            "min x s.t. x - s = rhs(t), x, s >= 0",
        ),
        "LP3" | "LP4" => {
            let c = if name == "LP3" {
                mat(2, &[(0, 0, "t/2"), (1, 1, "-t/2")])
            } else {
                mat(
                    2,
                    &[
                        (0, 0, "piecewise(t <= 0: t/2, else: 0)"),
                        (1, 1, "piecewise(t <= 0: -t/2, else: 0)"),
                    ],
                )
            };
            problem(
                name,
                vec![
                    (mat(2, &[(0, 0, "1"), (1, 1, "1")]), "2"),
                    (pick(2, 0, 1), "0"),
                ],
                c,
                (-1.0, 1.0),
                "min c(t) x over -1 <= x <= 1 with p = 1 + x, q = 1 - x",
            )
        }
        "LP5" | "LP6" => problem(
            name,
            vec![
                (
                    mat(2, &[(0, 0, "1"), (1, 1, "1")]),
                    if name == "LP5" {
                        "piecewise(t > 0: 2*t, else: 0)"
                    } else {
                        "piecewise(t < 0: -2*t*sin(pi/t)^2, else: 0)"
                    },
                ),
                (pick(2, 0, 1), "0"),
            ],
            TimeMat::zeros(2),
            (-1.0, 1.0),
            "min 0 over -w(t) <= x <= w(t) with p = w + x, q = w - x",
        ),
        other => return Err(ModelError::UnknownExample(other.to_string())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_builds() {
        for name in builtin_names() {
            let p = builtin(name).unwrap();
            assert_eq!(&p.name, name);
            assert!(p.m() <= crate::symlin::tau(p.n()));
        }
        assert_eq!(
            builtin("P9").unwrap_err(),
            ModelError::UnknownExample("P9".into())
        );
    }

    #[test]
    fn p1_data_at_one_and_zero() {
        let p = builtin("P1").unwrap();
        let inst = p.instantiate(1.0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 0.0 } else { 0.5 };
                assert_eq!(inst.c.get(i, j), want);
            }
        }
        assert_eq!(inst.b, vec![1.0; 3]);
        let inst0 = p.instantiate(0.0).unwrap();
        assert_eq!(inst0.c.get(0, 1), 0.0);
        assert_eq!(inst0.c.get(1, 2), 0.5);
        assert!(p.instantiate(2.0).is_err());
        assert!(p.instantiate(-3.5).is_err());
    }

    #[test]
    fn p3_constraints_read_as_stated() {
        let p = builtin("P3").unwrap();
        let inst = p.instantiate(0.5).unwrap();
        // A point with X44 = X33 = 1/4, X22 = 1 and 2 X12 = -t - 1/2.
        let x = crate::symlin::SymMat::from_fn(4, |i, j| match (i, j) {
            (0, 0) => 3.0,
            (1, 1) => 1.0,
            (2, 2) | (3, 3) => 0.25,
            (0, 1) => -0.5,
            _ => 0.0,
        });
        let ax = inst.apply(&x);
        assert_eq!(ax, vec![0.0, 1.0, -0.5]);
        assert_eq!(inst.b, vec![0.0, 1.0, -0.5]);
    }

    #[test]
    fn lp2_is_diagonal_slack_form() {
        let p = builtin("LP2").unwrap();
        let inst = p.instantiate(-0.3).unwrap();
        assert_eq!((inst.n(), inst.m()), (2, 2));
        assert!((inst.b[0] - 0.3).abs() < 1e-15);
        assert_eq!(inst.c.get(0, 0), 1.0);
    }

    #[test]
    fn polynomial_flags() {
        assert!(builtin("P1").unwrap().data_is_polynomial());
        assert!(builtin("P3").unwrap().data_is_polynomial());
        assert!(!builtin("P4").unwrap().data_is_polynomial());
        assert!(!builtin("LP2").unwrap().data_is_polynomial());
    }

    #[test]
    fn piecewise_data_is_continuous() {
        for name in builtin_names() {
            let p = builtin(name).unwrap();
            for (loc, audit) in p.continuity_audit() {
                assert!(audit.continuous, "{name} {loc} at {}", audit.at);
            }
        }
    }
}
