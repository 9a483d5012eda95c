use super::Expr;

fn b(e: Expr) -> Box<Expr> {
    Box::new(e)
}

pub(super) fn differentiate(e: &Expr) -> Expr {
    use Expr::*;
    match e {
        Const(_) => Const(0.0),
        T => Const(1.0),
        Neg(a) => Neg(b(differentiate(a))),
        Add(x, y) => Add(b(differentiate(x)), b(differentiate(y))),
        Sub(x, y) => Sub(b(differentiate(x)), b(differentiate(y))),
        Mul(x, y) => Add(
            b(Mul(b(differentiate(x)), y.clone())),
            b(Mul(x.clone(), b(differentiate(y)))),
        ),
        Div(x, y) => Div(
            b(Sub(
                b(Mul(b(differentiate(x)), y.clone())),
                b(Mul(x.clone(), b(differentiate(y)))),
            )),
            b(Pow(y.clone(), 2)),
        ),
        Pow(a, 0) => Mul(b(Const(0.0)), b(differentiate(a))),
        Pow(a, k) => Mul(
            b(Mul(b(Const(*k as f64)), b(Pow(a.clone(), k - 1)))),
            b(differentiate(a)),
        ),
        Sin(a) => Mul(b(Cos(a.clone())), b(differentiate(a))),
        Cos(a) => Neg(b(Mul(b(Sin(a.clone())), b(differentiate(a))))),
        Abs(a) => Mul(b(Sign(a.clone())), b(differentiate(a))),
        // Zero wherever the sign is defined; its own argument still has to be
        // evaluated so the undefined point is reported.
        Sign(a) => Mul(b(Const(0.0)), b(Sign(a.clone()))),
        Piecewise {
            branches,
            otherwise,
            ..
        } => Piecewise {
            branches: branches
                .iter()
                .map(|(g, e)| (*g, differentiate(e)))
                .collect(),
            otherwise: otherwise.as_ref().map(|e| b(differentiate(e))),
            strict: true,
        },
    }
}

fn is_const(e: &Expr, v: f64) -> bool {
    matches!(e, Expr::Const(c) if *c == v)
}

/// Constant folding and the neutral-element identities. Expressions that
/// could fail to evaluate (a `Sign`, a strict piecewise) are never folded
/// away, so the simplified expression errors exactly where the original did.
pub(super) fn simplify(e: Expr) -> Expr {
    use Expr::*;
    let e = match e {
        Neg(a) => match simplify(*a) {
            Const(c) => Const(-c),
            Neg(inner) => *inner,
            a => Neg(b(a)),
        },
        Add(x, y) => {
            let (x, y) = (simplify(*x), simplify(*y));
            if is_const(&x, 0.0) {
                y
            } else if is_const(&y, 0.0) {
                x
            } else {
                Add(b(x), b(y))
            }
        }
        Sub(x, y) => {
            let (x, y) = (simplify(*x), simplify(*y));
            if is_const(&y, 0.0) {
                x
            } else if is_const(&x, 0.0) {
                simplify(Neg(b(y)))
            } else {
                Sub(b(x), b(y))
            }
        }
        Mul(x, y) => {
            let (x, y) = (simplify(*x), simplify(*y));
            if (is_const(&x, 0.0) && is_total(&y)) || (is_const(&y, 0.0) && is_total(&x)) {
                Const(0.0)
            } else if is_const(&x, 1.0) {
                y
            } else if is_const(&y, 1.0) {
                x
            } else if is_const(&x, -1.0) {
                simplify(Neg(b(y)))
            } else {
                Mul(b(x), b(y))
            }
        }
        Div(x, y) => {
            let (x, y) = (simplify(*x), simplify(*y));
            if is_const(&y, 1.0) {
                x
            } else {
                Div(b(x), b(y))
            }
        }
        Pow(a, k) => {
            let a = simplify(*a);
            match k {
                0 if is_total(&a) => Const(1.0),
                1 => a,
                _ => Pow(b(a), k),
            }
        }
        Sin(a) => Sin(b(simplify(*a))),
        Cos(a) => Cos(b(simplify(*a))),
        Abs(a) => Abs(b(simplify(*a))),
        Sign(a) => Sign(b(simplify(*a))),
        Piecewise {
            branches,
            otherwise,
            strict,
        } => Piecewise {
            branches: branches
                .into_iter()
                .map(|(g, e)| (g, simplify(e)))
                .collect(),
            otherwise: otherwise.map(|e| b(simplify(*e))),
            strict,
        },
        other => other,
    };
    match e.constant_value() {
        Some(v) if !matches!(e, Const(_)) => Const(v),
        _ => e,
    }
}

/// True when evaluation cannot fail for any finite `t`.
fn is_total(e: &Expr) -> bool {
    use Expr::*;
    match e {
        Const(_) | T => true,
        Neg(a) | Sin(a) | Cos(a) | Abs(a) => is_total(a),
        Pow(a, k) => *k >= 0 && is_total(a),
        Add(x, y) | Sub(x, y) | Mul(x, y) => is_total(x) && is_total(y),
        Div(..) | Sign(_) | Piecewise { .. } => false,
    }
}

fn poly_add(a: &[f64], b: &[f64], sign: f64) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, &x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, &x) in b.iter().enumerate() {
        out[i] += sign * x;
    }
    out
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub(super) fn polynomial_coeffs(e: &Expr) -> Option<Vec<f64>> {
    use Expr::*;
    if let Some(v) = e.constant_value() {
        return Some(vec![v]);
    }
    match e {
        T => Some(vec![0.0, 1.0]),
        Neg(a) => Some(polynomial_coeffs(a)?.into_iter().map(|c| -c).collect()),
        Add(x, y) => Some(poly_add(
            &polynomial_coeffs(x)?,
            &polynomial_coeffs(y)?,
            1.0,
        )),
        Sub(x, y) => Some(poly_add(
            &polynomial_coeffs(x)?,
            &polynomial_coeffs(y)?,
            -1.0,
        )),
        Mul(x, y) => Some(poly_mul(&polynomial_coeffs(x)?, &polynomial_coeffs(y)?)),
        Div(x, y) => {
            let d = y.constant_value().filter(|d| *d != 0.0)?;
            Some(polynomial_coeffs(x)?.into_iter().map(|c| c / d).collect())
        }
        Pow(a, k) if *k >= 0 => {
            let base = polynomial_coeffs(a)?;
            let mut out = vec![1.0];
            for _ in 0..*k {
                out = poly_mul(&out, &base);
            }
            Some(out)
        }
        _ => None,
    }
}
