use serde::Serialize;

use super::{ClassifiedTrajectory, Label};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRow {
    pub label: Label,
    pub count: usize,
    /// Whether the stated assumptions allow this type of point.
    pub permitted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaxonomyAudit {
    pub passed: bool,
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
    pub table: Vec<AuditRow>,
}

/// Point types possible under polynomial data with a non-singular time.
const FINITE_TYPES: [Label; 3] = [
    Label::Regular,
    Label::NonDifferentiable,
    Label::DiscontinuousIsolatedMultiple,
];

/// Checks the labels of `report` against the types the assumptions permit.
///
/// With polynomial data and a non-singular time, only regular points,
/// non-differentiable points and discontinuous isolated multiple points can
/// occur, finitely many of the latter two. Any other label is a warning:
/// either the classification or one of the flags is wrong.
pub fn taxonomy_audit(
    report: &ClassifiedTrajectory,
    data_is_polynomial: bool,
    has_nonsingular_time: bool,
) -> TaxonomyAudit {
    let restricted = data_is_polynomial && has_nonsingular_time;
    let mut warnings = Vec::new();
    let mut notes = Vec::new();
    let table: Vec<AuditRow> = Label::ALL
        .iter()
        .map(|&label| AuditRow {
            label,
            count: report.count(label),
            permitted: !restricted || FINITE_TYPES.contains(&label) || label == Label::Unknown,
        })
        .collect();
    for e in &report.labeled_events {
        let label = e.point_type.label;
        if restricted && !FINITE_TYPES.contains(&label) && label != Label::Unknown {
            warnings.push(format!(
                "t = {:.6}: {label:?} is impossible for polynomial data with a non-singular time",
                e.t
            ));
        }
    }
    if has_nonsingular_time && !report.has_nonsingular_time() && !report.samples.is_empty() {
        warnings.push(
            "flag says a non-singular time exists, but no traced sample has an invertible Jacobian"
                .to_string(),
        );
    }
    if !has_nonsingular_time {
        let (a, b) = report.horizon;
        notes.push(format!("all t∈({a}, {b}) are singular times"));
        if report.has_nonsingular_time() {
            warnings.push(format!(
                "flag says no non-singular time, but {} traced samples have an invertible Jacobian",
                report.regular_samples
            ));
        }
    }
    if !data_is_polynomial {
        notes.push("data not polynomial: every type of point is possible".to_string());
    }
    let unknown = report.count(Label::Unknown);
    if unknown > 0 {
        notes.push(format!("{unknown} events could not be classified"));
    }
    TaxonomyAudit {
        passed: warnings.is_empty(),
        warnings,
        notes,
        table,
    }
}

impl TaxonomyAudit {
    /// Two-column summary: assumptions, then the observed types of points.
    pub fn render_table(&self) -> String {
        let mut s = String::from("type of point                         count  permitted\n");
        for r in &self.table {
            s.push_str(&format!(
                "{:<36} {:>6}  {}\n",
                format!("{:?}", r.label),
                r.count,
                if r.permitted { "yes" } else { "no" }
            ));
        }
        s
    }
}
