//! TOML problem files.
//!
//! ```toml
//! schema_version = 1
//! name = "cayley"
//! n = 3
//! m = 3
//! horizon = [-3.0, 2.0]
//! # upper triangles, row by row: row i holds entries (i, i) .. (i, n-1)
//! C = [["0", "t/2", "t/2"], ["0", "1/2"], ["0"]]
//! A = [
//!   [["1", "0", "0"], ["0", "0"], ["0"]],
//!   [["0", "0", "0"], ["1", "0"], ["0"]],
//!   [["0", "0", "0"], ["0", "0"], ["1"]],
//! ]
//! b = ["1", "1", "1"]
//! notes = "optional"
//! ```

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tvsdp::{parse_expr, TimeExpr, TimeMat, TvSdpProblem};

pub const PROBLEM_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub horizon: [f64; 2],
    #[serde(rename = "C")]
    pub c: Vec<Vec<String>>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<Vec<String>>>,
    pub b: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

fn default_schema() -> u32 {
    PROBLEM_SCHEMA_VERSION
}

/// Problem file that does not describe a valid problem; `location` names the
/// offending key or line.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub location: String,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

impl std::error::Error for ParseError {}

fn err(location: impl Into<String>, message: impl Into<String>) -> ParseError {
    ParseError {
        location: location.into(),
        message: message.into(),
    }
}

fn expr(location: &str, src: &str) -> Result<TimeExpr, ParseError> {
    parse_expr(src).map_err(|e| err(location, format!("{e} in {src:?}")))
}

fn upper(key: &str, n: usize, rows: &[Vec<String>]) -> Result<TimeMat, ParseError> {
    if rows.len() != n {
        return Err(err(key, format!("expected {n} rows, found {}", rows.len())));
    }
    let mut m = TimeMat::zeros(n);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n - i {
            return Err(err(
                format!("{key}[{i}]"),
                format!("row {i} of an upper triangle holds {} entries, found {}", n - i, row.len()),
            ));
        }
        for (k, src) in row.iter().enumerate() {
            let j = i + k;
            m.set(i, j, expr(&format!("{key}[{i}][{j}]"), src)?);
        }
    }
    Ok(m)
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        toml::from_str(text).map_err(|e| {
            let location = match e.span() {
                Some(span) => {
                    let line = text[..span.start].matches('\n').count() + 1;
                    format!("line {line}")
                }
                None => "problem file".to_string(),
            };
            err(location, e.message().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self, ParseError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| err(path.display().to_string(), e.to_string()))?;
        Self::parse(&text).map_err(|e| err(format!("{}: {}", path.display(), e.location), e.message))
    }

    pub fn to_problem(&self) -> Result<TvSdpProblem, ParseError> {
        if self.schema_version != PROBLEM_SCHEMA_VERSION {
            return Err(err(
                "schema_version",
                format!("unsupported version {} (expected {PROBLEM_SCHEMA_VERSION})", self.schema_version),
            ));
        }
        if self.a.len() != self.m {
            return Err(err("A", format!("m = {} but {} matrices given", self.m, self.a.len())));
        }
        if self.b.len() != self.m {
            return Err(err("b", format!("m = {} but {} entries given", self.m, self.b.len())));
        }
        let c = upper("C", self.n, &self.c)?;
        let a = self
            .a
            .iter()
            .enumerate()
            .map(|(k, rows)| upper(&format!("A[{k}]"), self.n, rows))
            .collect::<Result<Vec<_>, _>>()?;
        let b = self
            .b
            .iter()
            .enumerate()
            .map(|(k, src)| expr(&format!("b[{k}]"), src))
            .collect::<Result<Vec<_>, _>>()?;
        let p = TvSdpProblem::new(&self.name, a, b, c, (self.horizon[0], self.horizon[1]))
            .map_err(|e| err("problem", e.to_string()))?;
        Ok(match &self.notes {
            Some(n) => p.with_notes(n.clone()),
            None => p,
        })
    }

    /// File describing `p`, with every expression in its canonical form.
    pub fn from_problem(p: &TvSdpProblem) -> Self {
        let n = p.n();
        let rows = |m: &TimeMat| -> Vec<Vec<String>> {
            (0..n)
                .map(|i| (i..n).map(|j| m.get(i, j).to_string()).collect())
                .collect()
        };
        let (lo, hi) = p.horizon();
        ProblemFile {
            schema_version: PROBLEM_SCHEMA_VERSION,
            name: p.name.clone(),
            n,
            m: p.m(),
            horizon: [lo, hi],
            c: rows(p.objective()),
            a: p.constraint_matrices().iter().map(rows).collect(),
            b: p.rhs().iter().map(ToString::to_string).collect(),
            notes: p.notes.clone(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("problem file serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tvsdp::model::{builtin, builtin_names};

    #[test]
    fn builtins_round_trip_through_toml() {
        for name in builtin_names() {
            let p = builtin(name).unwrap();
            let text = ProblemFile::from_problem(&p).to_toml();
            let q = ProblemFile::parse(&text).unwrap().to_problem().unwrap();
            for t in [-0.7, 0.3, 0.9] {
                let (a, b) = (p.instantiate(t).unwrap(), q.instantiate(t).unwrap());
                assert_eq!(a.c, b.c, "{name} at {t}");
                assert_eq!(a.b, b.b, "{name} at {t}");
            }
        }
    }

    #[test]
    fn toml_errors_carry_a_line() {
        let e = ProblemFile::parse("name = \"x\"\nn = \"three\"\n").unwrap_err();
        assert_eq!(e.location, "line 2");
    }

    #[test]
    fn bad_expression_names_its_entry() {
        let text = r#"
name = "bad"
n = 2
m = 1
horizon = [-1.0, 1.0]
C = [["1", "0"], ["1"]]
A = [[["1", "t +"], ["0"]]]
b = ["1"]
"#;
        let e = ProblemFile::parse(text).unwrap().to_problem().unwrap_err();
        assert_eq!(e.location, "A[0][0][1]");
    }

    #[test]
    fn ragged_triangle_is_rejected() {
        let text = r#"
name = "ragged"
n = 2
m = 0
horizon = [-1.0, 1.0]
C = [["1", "0", "0"], ["1"]]
A = []
b = []
"#;
        let e = ProblemFile::parse(text).unwrap().to_problem().unwrap_err();
        assert_eq!(e.location, "C[0]");
    }
}
