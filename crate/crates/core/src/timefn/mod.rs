//! Scalar functions of time: parsing, evaluation and symbolic differentiation.
//!
//! Expressions cover the data of time-varying problems: polynomials,
//! `sin`, `cos`, `abs`, integer powers and `piecewise` definitions guarded by
//! comparisons of `t` against constants. The grammar is documented on
//! [`parse_expr`].

mod deriv;
mod parse;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;
use crate::symlin::{tau, SymMat};

/// Half-width of the one-sided evaluation used by the continuity audit.
pub const CONTINUITY_PROBE: f64 = 1e-11;
/// Largest allowed gap between one-sided limits at a breakpoint.
pub const CONTINUITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TimeFnError {
    #[error("syntax error at byte {offset}: {message}")]
    SyntaxError { offset: usize, message: String },
    #[error("unknown identifier {name:?} at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("expression undefined at t = {t}: {reason}")]
    DomainError { t: f64, reason: String },
    #[error("expression not differentiable at t = {t}")]
    NotDifferentiable { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Lt,
    Le,
    Gt,
    Ge,
}

impl Cmp {
    fn holds<T: Real>(self, t: T, c: T) -> bool {
        match self {
            Cmp::Lt => t < c,
            Cmp::Le => t <= c,
            Cmp::Gt => t > c,
            Cmp::Ge => t >= c,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
        }
    }
}

/// Guard `t <op> c` of a piecewise branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Guard {
    pub op: Cmp,
    pub c: f64,
}

/// Expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    T,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Abs(Box<Expr>),
    /// Derivative of `abs`; undefined where its argument vanishes.
    Sign(Box<Expr>),
    /// First branch whose guard holds wins, then `otherwise`.
    /// A `strict` piecewise refuses evaluation exactly at its breakpoints;
    /// differentiation produces strict piecewise expressions.
    Piecewise {
        branches: Vec<(Guard, Expr)>,
        otherwise: Option<Box<Expr>>,
        strict: bool,
    },
}

impl Expr {
    pub fn eval<T: Real>(&self, t: T) -> Result<T, TimeFnError> {
        let domain = |reason: &str| TimeFnError::DomainError {
            t: t.to_f64_lossy(),
            reason: reason.to_string(),
        };
        Ok(match self {
            Expr::Const(c) => T::c(*c),
            Expr::T => t,
            Expr::Neg(a) => -a.eval(t)?,
            Expr::Add(a, b) => a.eval(t)? + b.eval(t)?,
            Expr::Sub(a, b) => a.eval(t)? - b.eval(t)?,
            Expr::Mul(a, b) => a.eval(t)? * b.eval(t)?,
            Expr::Div(a, b) => {
                let den = b.eval(t)?;
                if den == T::zero() {
                    return Err(domain("division by zero"));
                }
                a.eval(t)? / den
            }
            Expr::Pow(a, k) => {
                let base = a.eval(t)?;
                if *k < 0 && base == T::zero() {
                    return Err(domain("negative power of zero"));
                }
                base.powi(*k)
            }
            Expr::Sin(a) => a.eval(t)?.sin(),
            Expr::Cos(a) => a.eval(t)?.cos(),
            Expr::Abs(a) => a.eval(t)?.abs(),
            Expr::Sign(a) => {
                let v = a.eval(t)?;
                if v == T::zero() {
                    return Err(TimeFnError::NotDifferentiable {
                        t: t.to_f64_lossy(),
                    });
                }
                v.signum()
            }
            Expr::Piecewise {
                branches,
                otherwise,
                strict,
            } => {
                if *strict && branches.iter().any(|(g, _)| t == T::c(g.c)) {
                    return Err(TimeFnError::NotDifferentiable {
                        t: t.to_f64_lossy(),
                    });
                }
                match branches.iter().find(|(g, _)| g.op.holds(t, T::c(g.c))) {
                    Some((_, e)) => e.eval(t)?,
                    None => match otherwise {
                        Some(e) => e.eval(t)?,
                        None => return Err(domain("no piecewise branch covers t")),
                    },
                }
            }
        })
    }

    pub fn depends_on_t(&self) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::T => true,
            Expr::Neg(a)
            | Expr::Pow(a, _)
            | Expr::Sin(a)
            | Expr::Cos(a)
            | Expr::Abs(a)
            | Expr::Sign(a) => a.depends_on_t(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.depends_on_t() || b.depends_on_t()
            }
            Expr::Piecewise { .. } => true,
        }
    }

    /// Value of a `t`-free expression.
    pub fn constant_value(&self) -> Option<f64> {
        if self.depends_on_t() {
            return None;
        }
        self.eval(0.0f64).ok().filter(|v| v.is_finite())
    }

    fn collect_breakpoints(&self, out: &mut Vec<f64>) {
        match self {
            Expr::Const(_) | Expr::T => {}
            Expr::Neg(a)
            | Expr::Pow(a, _)
            | Expr::Sin(a)
            | Expr::Cos(a)
            | Expr::Abs(a)
            | Expr::Sign(a) => a.collect_breakpoints(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_breakpoints(out);
                b.collect_breakpoints(out);
            }
            Expr::Piecewise {
                branches,
                otherwise,
                ..
            } => {
                for (g, e) in branches {
                    out.push(g.c);
                    e.collect_breakpoints(out);
                }
                if let Some(e) = otherwise {
                    e.collect_breakpoints(out);
                }
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Const(c) if *c < 0.0 => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
    if e.precedence() < min_prec {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c == std::f64::consts::PI => write!(f, "pi"),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::T => write!(f, "t"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                write_child(f, a, 3)
            }
            Expr::Add(a, b) => {
                write_child(f, a, 1)?;
                write!(f, " + ")?;
                write_child(f, b, 2)
            }
            Expr::Sub(a, b) => {
                write_child(f, a, 1)?;
                write!(f, " - ")?;
                write_child(f, b, 2)
            }
            Expr::Mul(a, b) => {
                write_child(f, a, 2)?;
                write!(f, "*")?;
                write_child(f, b, 3)
            }
            Expr::Div(a, b) => {
                write_child(f, a, 2)?;
                write!(f, "/")?;
                write_child(f, b, 3)
            }
            Expr::Pow(a, k) => {
                write_child(f, a, 5)?;
                write!(f, "^{k}")
            }
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Abs(a) => write!(f, "abs({a})"),
            Expr::Sign(a) => write!(f, "sign({a})"),
            Expr::Piecewise {
                branches,
                otherwise,
                ..
            } => {
                write!(f, "piecewise(")?;
                for (k, (g, e)) in branches.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "t {} {}: {e}", g.op.symbol(), Expr::Const(g.c))?;
                }
                if let Some(e) = otherwise {
                    write!(f, ", else: {e}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// A parsed scalar function of time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TimeExpr {
    ast: Expr,
}

/// Parses an expression in the time-function grammar.
///
/// ```text
/// expr   = term { ("+" | "-") term } ;
/// term   = unary { ("*" | "/") unary } ;
/// unary  = "-" unary | power ;
/// power  = atom [ "^" [ "-" ] integer ] ;
/// atom   = number | "t" | "pi" | func "(" expr ")" | piecewise | "(" expr ")" ;
/// func   = "sin" | "cos" | "abs" ;
/// piecewise = "piecewise" "(" branch { "," branch } [ "," "else" ":" expr ] ")" ;
/// branch = "t" ("<" | "<=" | ">" | ">=") const_expr ":" expr ;
/// ```
pub fn parse_expr(src: &str) -> Result<TimeExpr, TimeFnError> {
    parse::parse(src).map(|ast| TimeExpr { ast })
}

/// One-sided limits of an expression at a piecewise breakpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreakpointAudit {
    pub at: f64,
    pub left: f64,
    pub right: f64,
    pub continuous: bool,
}

impl TimeExpr {
    pub fn new(ast: Expr) -> Self {
        Self { ast }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            ast: Expr::Const(c),
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    pub fn eval<T: Real>(&self, t: T) -> Result<T, TimeFnError> {
        self.ast.eval(t)
    }

    /// Symbolic derivative with respect to `t`.
    pub fn differentiate(&self) -> TimeExpr {
        TimeExpr {
            ast: deriv::simplify(deriv::differentiate(&self.ast)),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.ast, Expr::Const(c) if c == 0.0)
    }

    pub fn constant_value(&self) -> Option<f64> {
        self.ast.constant_value()
    }

    /// Monomial coefficients `[c₀, c₁, …]` when the expression is a polynomial in `t`.
    pub fn polynomial_coeffs(&self) -> Option<Vec<f64>> {
        deriv::polynomial_coeffs(&self.ast)
    }

    /// Degree of a polynomial expression; the zero polynomial has degree 0.
    pub fn polynomial_degree(&self) -> Option<usize> {
        let c = self.polynomial_coeffs()?;
        let scale = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        Some(c.iter().rposition(|x| x.abs() > 1e-14 * scale).unwrap_or(0))
    }

    /// Sorted, deduplicated guard constants of every piecewise subexpression.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.ast.collect_breakpoints(&mut out);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Compares one-sided values at each breakpoint inside `(lo, hi)`.
    pub fn continuity_audit(&self, lo: f64, hi: f64) -> Vec<BreakpointAudit> {
        self.breakpoints()
            .into_iter()
            .filter(|&c| c > lo && c < hi)
            .map(|c| {
                let h = CONTINUITY_PROBE * (1.0 + c.abs());
                let left = self.eval(c - h).unwrap_or(f64::NAN);
                let right = self.eval(c + h).unwrap_or(f64::NAN);
                let continuous = (left - right).abs() <= CONTINUITY_TOL;
                BreakpointAudit {
                    at: c,
                    left,
                    right,
                    continuous,
                }
            })
            .collect()
    }
}

impl fmt::Display for TimeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.ast.fmt(f)
    }
}

impl std::str::FromStr for TimeExpr {
    type Err = TimeFnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_expr(s)
    }
}

impl TryFrom<String> for TimeExpr {
    type Error = TimeFnError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        parse_expr(&s)
    }
}

impl From<TimeExpr> for String {
    fn from(e: TimeExpr) -> String {
        e.to_string()
    }
}

impl From<f64> for TimeExpr {
    fn from(c: f64) -> Self {
        Self::constant(c)
    }
}

/// Symmetric matrix of time expressions, stored as its upper triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeMat {
    n: usize,
    upper: Vec<TimeExpr>,
}

impl TimeMat {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            upper: vec![TimeExpr::zero(); tau(n)],
        }
    }

    /// Builds from the row-major upper triangle.
    pub fn from_upper(n: usize, upper: Vec<TimeExpr>) -> Option<Self> {
        (upper.len() == tau(n)).then_some(Self { n, upper })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> TimeExpr) -> Self {
        let mut upper = Vec::with_capacity(tau(n));
        for i in 0..n {
            for j in i..n {
                upper.push(f(i, j));
            }
        }
        Self { n, upper }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * (2 * self.n - i + 1) / 2 + (j - i)
    }

    pub fn get(&self, i: usize, j: usize) -> &TimeExpr {
        &self.upper[self.idx(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, e: TimeExpr) {
        let k = self.idx(i, j);
        self.upper[k] = e;
    }

    pub fn entries(&self) -> impl Iterator<Item = &TimeExpr> {
        self.upper.iter()
    }

    pub fn eval<T: Real>(&self, t: T) -> Result<SymMat<T>, TimeFnError> {
        let mut vals = Vec::with_capacity(self.upper.len());
        for e in &self.upper {
            vals.push(if e.is_zero() { T::zero() } else { e.eval(t)? });
        }
        let mut it = vals.into_iter();
        Ok(SymMat::from_fn(self.n, |_, _| {
            it.next().expect("length checked")
        }))
    }

    pub fn differentiate(&self) -> TimeMat {
        TimeMat {
            n: self.n,
            upper: self.upper.iter().map(TimeExpr::differentiate).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.upper.iter().all(TimeExpr::is_zero)
    }
}
