//! Machine-readable trace reports and plot tables.

use std::io::Write;

use anyhow::Result;
use serde::Serialize;
use tvsdp::classifier::{Accumulation, ClassifiedTrajectory, Evidence, SideConvention, TaxonomyAudit};
use tvsdp::symlin::svec;
use tvsdp::tracer::EventKind;
use tvsdp::{Label, TrajectorySample};

/// Version of the report layout below; bumped on any incompatible change.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct ProblemInfo {
    pub name: String,
    /// `example:NAME` or the file path as given.
    pub source: String,
    pub n: usize,
    pub m: usize,
    pub horizon: [f64; 2],
    pub data_is_polynomial: bool,
}

/// Every option the run used, defaults included.
#[derive(Debug, Clone, Serialize)]
pub struct EffectiveOptions {
    pub from: f64,
    pub to: f64,
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub resolution: f64,
    pub window: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleRow {
    pub t: f64,
    pub svec_x: Vec<f64>,
    pub svec_z: Vec<f64>,
    pub p_star: f64,
    pub d_star: f64,
    pub gap: f64,
    pub rank_x: usize,
    pub rank_z: usize,
    pub sigma_min_rel: f64,
    pub multiplicity_range: Option<f64>,
}

impl SampleRow {
    fn new(s: &TrajectorySample) -> Self {
        Self {
            t: s.t,
            svec_x: svec(&s.point.x).into_vec(),
            svec_z: svec(&s.point.z).into_vec(),
            p_star: s.p_star,
            d_star: s.d_star,
            gap: s.point.gap,
            rank_x: s.certificate.rank_x,
            rank_z: s.certificate.rank_z,
            sigma_min_rel: s.sigma_min_rel(),
            multiplicity_range: s.multiplicity_range,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EventRow {
    pub t: f64,
    /// Bracket of the underlying tracer event; absent for an accumulation
    /// point that is not itself an event.
    pub bracket: Option<[f64; 2]>,
    pub kinds: Vec<EventKind>,
    pub sigma_min_rel: Option<f64>,
    pub label: Label,
    pub side_convention: SideConvention,
    pub evidence: Vec<Evidence>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub problem: ProblemInfo,
    pub options: EffectiveOptions,
    pub summary: Vec<(Label, usize)>,
    pub regular_samples: usize,
    pub events: Vec<EventRow>,
    pub accumulations: Vec<Accumulation>,
    pub audit: TaxonomyAudit,
    pub failure: Option<String>,
    pub samples: Vec<SampleRow>,
}

impl Report {
    pub fn new(
        problem: ProblemInfo,
        options: EffectiveOptions,
        traj: &ClassifiedTrajectory,
        audit: TaxonomyAudit,
    ) -> Self {
        let events = traj
            .labeled_events
            .iter()
            .map(|le| {
                let ev = le.event.map(|k| &traj.events[k]);
                EventRow {
                    t: le.t,
                    bracket: ev.map(|e| [e.t_lo, e.t_hi]),
                    kinds: ev.map(|e| e.kinds.clone()).unwrap_or_default(),
                    sigma_min_rel: ev.map(|e| e.sigma_min_rel),
                    label: le.point_type.label,
                    side_convention: le.point_type.side_convention,
                    evidence: le.point_type.evidence.clone(),
                }
            })
            .collect();
        Report {
            schema_version: REPORT_SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            problem,
            options,
            summary: traj.summary.iter().map(|(l, c)| (*l, *c)).collect(),
            regular_samples: traj.regular_samples,
            events,
            accumulations: traj.accumulations.clone(),
            audit,
            failure: traj.failure.as_ref().map(|f| format!("t = {}: {}", f.t, f.reason)),
            samples: traj.samples.iter().map(SampleRow::new).collect(),
        }
    }
}

fn svec_headers(prefix: &str, len: usize) -> impl Iterator<Item = String> + '_ {
    (1..=len).map(move |k| format!("{prefix}{k}"))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per sample: `t`, `svec(X)`, `svec(Z)` and the diagnostics.
pub fn write_samples_csv<W: Write>(out: W, rows: &[SampleRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let len = rows.first().map_or(0, |r| r.svec_x.len());
    let mut header = vec!["t".to_string()];
    header.extend(svec_headers("svec_x_", len));
    header.extend(svec_headers("svec_z_", len));
    header.extend(
        ["p_star", "d_star", "gap", "rank_x", "rank_z", "sigma_min_rel", "multiplicity_range"]
            .map(String::from),
    );
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.t.to_string()];
        rec.extend(r.svec_x.iter().map(f64::to_string));
        rec.extend(r.svec_z.iter().map(f64::to_string));
        rec.extend([
            r.p_star.to_string(),
            r.d_star.to_string(),
            r.gap.to_string(),
            r.rank_x.to_string(),
            r.rank_z.to_string(),
            r.sigma_min_rel.to_string(),
            fmt_opt(r.multiplicity_range),
        ]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Plot columns: `t` and every upper-triangle entry `X[i,j]` (1-based).
pub fn write_trajectory_csv<W: Write>(out: W, samples: &[TrajectorySample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = samples.first().map_or(0, |s| s.point.x.dim());
    let mut header = vec!["t".to_string()];
    for i in 0..n {
        for j in i..n {
            header.push(format!("X[{},{}]", i + 1, j + 1));
        }
    }
    header.push("multi_valued".to_string());
    w.write_record(&header)?;
    for s in samples {
        let mut rec = vec![s.t.to_string()];
        for i in 0..n {
            for j in i..n {
                rec.push(s.point.x.get(i, j).to_string());
            }
        }
        rec.push(s.is_multi().to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_events_csv<W: Write>(out: W, events: &[EventRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "t_lo", "t_hi", "label", "side_convention", "kinds"])?;
    for e in events {
        let kinds: Vec<String> = e.kinds.iter().map(|k| format!("{k:?}")).collect();
        w.write_record([
            e.t.to_string(),
            e.bracket.map(|b| b[0].to_string()).unwrap_or_default(),
            e.bracket.map(|b| b[1].to_string()).unwrap_or_default(),
            format!("{:?}", e.label),
            format!("{:?}", e.side_convention),
            kinds.join(";"),
        ])?;
    }
    w.flush()?;
    Ok(())
}
