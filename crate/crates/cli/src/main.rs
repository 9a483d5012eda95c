//! `tvsdp` command-line front end.
//!
//! Exit status: 0 success, 2 failed assumption check, 3 solver failure,
//! 4 problem-file or argument error, 1 anything else (I/O).

mod problem_file;
mod report;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use tvsdp::classifier::{
    classify_trajectory, taxonomy_audit, ClassifyError, ClassifyOptions, WINDOW_FACTOR,
};
use tvsdp::ipm::{face_extent, solve, IpmError};
use tvsdp::kkt::{certify, enumerate_kkt, KktError};
use tvsdp::model::{builtin, builtin_names, check_assumptions, ModelError};
use tvsdp::symlin::svec;
use tvsdp::tracer::{TraceError, CERT_TOL};
use tvsdp::{SymMat, TraceOptions, TvSdpProblem};

use problem_file::{ParseError, ProblemFile};
use report::{EffectiveOptions, ProblemInfo, Report};

#[derive(Parser)]
#[command(name = "tvsdp", version, about = "Time-varying SDP solver, tracer and classifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
#[group(required = true, multiple = false)]
struct Source {
    /// Built-in example (see `tvsdp examples`).
    #[arg(long)]
    example: Option<String>,
    /// TOML problem file.
    #[arg(long)]
    file: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    source: Source,
    /// Start of the traced interval [default: 5% inside the horizon].
    #[arg(long, allow_hyphen_values = true)]
    from: Option<f64>,
    /// End of the traced interval [default: 5% inside the horizon].
    #[arg(long, allow_hyphen_values = true)]
    to: Option<f64>,
    /// Initial step [default: interval length / 200].
    #[arg(long)]
    dt: Option<f64>,
    /// Event resolution; also the smallest step.
    #[arg(long, default_value_t = 1e-4)]
    resolution: f64,
    /// Probe window around each event [default: 10 resolutions].
    #[arg(long)]
    window: Option<f64>,
    /// Seed of the face-probe directions.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for report.json, samples.csv, trajectory.csv and events.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the full JSON report to stdout.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check LICQ, strict feasibility and data continuity.
    Check {
        #[command(flatten)]
        source: Source,
        /// Number of interior grid times.
        #[arg(long, default_value_t = 50)]
        grid: usize,
        #[arg(long)]
        json: bool,
    },
    /// Solve the instance at one time.
    Solve {
        #[command(flatten)]
        source: Source,
        #[arg(long, allow_hyphen_values = true)]
        at: f64,
        #[arg(long)]
        json: bool,
    },
    /// Follow the trajectory and label its events.
    Trace(TraceArgs),
    /// Like `trace`, printing the label table and the taxonomy audit.
    Classify(TraceArgs),
    /// Find KKT roots by Newton's method from random starts.
    Enumerate {
        #[command(flatten)]
        source: Source,
        #[arg(long, allow_hyphen_values = true)]
        at: f64,
        #[arg(long, default_value_t = 2000)]
        starts: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// List the built-in examples, or print one as a problem file.
    Examples {
        #[arg(long)]
        show: Option<String>,
    },
}

/// Error from invalid input rather than from a computation.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<ParseError>() || cause.is::<UsageError>() {
            return 4;
        }
        if let Some(ModelError::UnknownExample(_) | ModelError::InvalidProblem(_)) = cause.downcast_ref() {
            return 4;
        }
        if let Some(TraceError::InvalidOptions(_)) = cause.downcast_ref() {
            return 4;
        }
        if let Some(ClassifyError::Trace(TraceError::InvalidOptions(_))) = cause.downcast_ref() {
            return 4;
        }
        if cause.is::<TraceError>()
            || cause.is::<ClassifyError>()
            || cause.is::<IpmError>()
            || cause.is::<KktError>()
            || cause.is::<ModelError>()
        {
            return 3;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Check { source, grid, json } => cmd_check(&source, grid, json),
        Command::Solve { source, at, json } => cmd_solve(&source, at, json),
        Command::Trace(args) => cmd_trace(&args, false),
        Command::Classify(args) => cmd_trace(&args, true),
        Command::Enumerate {
            source,
            at,
            starts,
            seed,
            json,
        } => cmd_enumerate(&source, at, starts, seed, json),
        Command::Examples { show } => cmd_examples(show.as_deref()),
    }
}

fn load(source: &Source) -> Result<(TvSdpProblem, String)> {
    match (&source.example, &source.file) {
        (Some(name), _) => Ok((builtin(name)?, format!("example:{name}"))),
        (None, Some(path)) => {
            let p = ProblemFile::load(path)?.to_problem()?;
            Ok((p, path.display().to_string()))
        }
        (None, None) => Err(usage("one of --example or --file is required")),
    }
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

#[derive(Serialize)]
struct CheckOutput {
    problem: String,
    grid: usize,
    licq_ok: bool,
    licq_min_rank: usize,
    m: usize,
    licq_failures: Vec<f64>,
    sigma_min_range: (f64, f64),
    sigma_max_range: (f64, f64),
    feasibility_ok: bool,
    min_primal_margin: f64,
    min_dual_margin: f64,
    feasibility_failures: Vec<(f64, String)>,
    continuity_ok: bool,
    discontinuities: Vec<(String, f64, f64, f64)>,
}

fn cmd_check(source: &Source, grid: usize, json: bool) -> Result<u8> {
    let (p, _) = load(source)?;
    if grid == 0 {
        return Err(usage("--grid must be positive"));
    }
    let r = check_assumptions(&p, grid)?;
    let mut margins = (f64::INFINITY, f64::INFINITY);
    let mut feas_fail = Vec::new();
    for s in &r.feasibility {
        match &s.margins {
            Ok(m) => {
                margins = (margins.0.min(m.primal_margin), margins.1.min(m.dual_margin));
                if !m.strictly_feasible() {
                    feas_fail.push((s.t, "margin below tolerance".to_string()));
                }
            }
            Err(e) => feas_fail.push((s.t, e.clone())),
        }
    }
    let out = CheckOutput {
        problem: p.name.clone(),
        grid,
        licq_ok: r.licq_ok(),
        licq_min_rank: r.licq.min_rank,
        m: p.m(),
        licq_failures: r.licq.failures.clone(),
        sigma_min_range: r.licq.sigma_min_range,
        sigma_max_range: r.licq.sigma_max_range,
        feasibility_ok: r.feasibility_ok(),
        min_primal_margin: margins.0,
        min_dual_margin: margins.1,
        feasibility_failures: feas_fail,
        continuity_ok: r.continuity_ok(),
        discontinuities: r
            .continuity
            .iter()
            .filter(|c| !c.continuous)
            .map(|c| (c.location.clone(), c.at, c.left, c.right))
            .collect(),
    };
    if json {
        print_json(&out)?;
    } else {
        let ok = |b: bool| if b { "ok" } else { "FAILED" };
        println!("{} on {grid} interior times", out.problem);
        println!(
            "  LICQ                {:<6} rank >= {}/{}; sigma_min in [{:.3e}, {:.3e}], sigma_max in [{:.3e}, {:.3e}]",
            ok(out.licq_ok),
            out.licq_min_rank,
            out.m,
            out.sigma_min_range.0,
            out.sigma_min_range.1,
            out.sigma_max_range.0,
            out.sigma_max_range.1
        );
        println!(
            "  strict feasibility  {:<6} min primal margin {:.3e}, min dual margin {:.3e}",
            ok(out.feasibility_ok),
            out.min_primal_margin,
            out.min_dual_margin
        );
        for (t, why) in out.feasibility_failures.iter().take(5) {
            println!("      t = {t}: {why}");
        }
        println!(
            "  data continuity     {:<6} {} breakpoints audited",
            ok(out.continuity_ok),
            r.continuity.len()
        );
        for (loc, at, l, rr) in &out.discontinuities {
            println!("      {loc} at t = {at}: left {l}, right {rr}");
        }
    }
    Ok(if r.all_ok() { 0 } else { 2 })
}

fn in_horizon(p: &TvSdpProblem, t: f64) -> Result<()> {
    if !p.in_horizon(t) {
        let (a, b) = p.horizon();
        return Err(usage(format!("t = {t} is outside the horizon ({a}, {b})")));
    }
    Ok(())
}

fn rows(m: &SymMat) -> Vec<Vec<f64>> {
    (0..m.dim()).map(|i| (0..m.dim()).map(|j| m.get(i, j)).collect()).collect()
}

#[derive(Serialize)]
struct SolveOutput {
    t: f64,
    status: String,
    iterations: usize,
    p_star: f64,
    d_star: f64,
    gap: f64,
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    z: Vec<Vec<f64>>,
    rank_x: usize,
    rank_z: usize,
    strictly_complementary: bool,
    primal_nondegenerate: bool,
    dual_nondegenerate: bool,
    sigma_min_rel: f64,
    face_extent: f64,
}

fn cmd_solve(source: &Source, t: f64, json: bool) -> Result<u8> {
    let (p, _) = load(source)?;
    in_horizon(&p, t)?;
    let inst = p.instantiate(t)?;
    let r = solve(&inst, None)?;
    let optimal = r.is_optimal();
    let cert = certify(&inst, &r.point, CERT_TOL)?;
    let face = face_extent(&inst, &r.point.x)?;
    let out = SolveOutput {
        t,
        status: format!("{:?}", r.status),
        iterations: r.iterations,
        p_star: r.p_star,
        d_star: r.d_star,
        gap: r.point.gap,
        x: rows(&r.point.x),
        y: r.point.y.clone(),
        z: rows(&r.point.z),
        rank_x: cert.rank_x,
        rank_z: cert.rank_z,
        strictly_complementary: cert.strictly_complementary,
        primal_nondegenerate: cert.primal_nondegenerate,
        dual_nondegenerate: cert.dual_nondegenerate,
        sigma_min_rel: cert.sigma_min_rel,
        face_extent: face.extent,
    };
    if json {
        print_json(&out)?;
    } else {
        println!("{} at t = {t}: {} after {} iterations", p.name, out.status, out.iterations);
        println!("  p* = {:.12}, d* = {:.12}, gap = {:.3e}", out.p_star, out.d_star, out.gap);
        let show = |name: &str, m: &[Vec<f64>]| {
            println!("  {name} =");
            for row in m {
                let cells: Vec<String> = row.iter().map(|v| format!("{v:>12.8}")).collect();
                println!("    {}", cells.join(" "));
            }
        };
        show("X", &out.x);
        println!("  y = {:?}", out.y);
        show("Z", &out.z);
        println!(
            "  rank X = {}, rank Z = {}, strictly complementary: {}, nondegenerate: primal {} dual {}",
            out.rank_x, out.rank_z, out.strictly_complementary, out.primal_nondegenerate, out.dual_nondegenerate
        );
        println!(
            "  sigma_min/sigma_max = {:.3e}, optimal face extent = {:.3e}",
            out.sigma_min_rel, out.face_extent
        );
    }
    if optimal {
        Ok(0)
    } else {
        bail!(IpmError::NumericalTrouble(format!("solver stopped with status {}", out.status)))
    }
}

fn cmd_trace(args: &TraceArgs, table: bool) -> Result<u8> {
    let (p, source) = load(&args.source)?;
    let (ti, tf) = p.horizon();
    let margin = 0.05 * (tf - ti);
    let from = args.from.unwrap_or(ti + margin);
    let to = args.to.unwrap_or(tf - margin);
    let mut trace = TraceOptions::new(from, to).with_resolution(args.resolution);
    trace.dt_init = args.dt;
    let trace = trace.effective();
    let window = args.window.unwrap_or(WINDOW_FACTOR * args.resolution);
    let mut opts = ClassifyOptions::new(trace.clone());
    opts.window = Some(window);
    opts.seed = args.seed;
    let traj = classify_trajectory(&p, &opts)?;
    let polynomial = p.data_is_polynomial();
    let audit = taxonomy_audit(&traj, polynomial, traj.has_nonsingular_time());
    let info = ProblemInfo {
        name: p.name.clone(),
        source,
        n: p.n(),
        m: p.m(),
        horizon: [ti, tf],
        data_is_polynomial: polynomial,
    };
    let options = EffectiveOptions {
        from,
        to,
        dt_init: trace.dt_init.expect("effective"),
        dt_min: trace.dt_min.expect("effective"),
        dt_max: trace.dt_max.expect("effective"),
        resolution: args.resolution,
        window,
        seed: args.seed,
    };
    let rep = Report::new(info, options, &traj, audit);
    if let Some(dir) = &args.out {
        write_outputs(dir, &rep, &traj.samples)?;
    }
    if args.json {
        print_json(&rep)?;
    } else {
        print_trace_summary(&rep, table);
    }
    Ok(if rep.failure.is_some() { 3 } else { 0 })
}

fn write_outputs(dir: &Path, rep: &Report, samples: &[tvsdp::TrajectorySample]) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let create = |name: &str| {
        let path = dir.join(name);
        fs::File::create(&path).with_context(|| format!("creating {}", path.display()))
    };
    let mut f = create("report.json")?;
    serde_json::to_writer_pretty(&mut f, rep)?;
    writeln!(f)?;
    report::write_samples_csv(create("samples.csv")?, &rep.samples)?;
    report::write_trajectory_csv(create("trajectory.csv")?, samples)?;
    report::write_events_csv(create("events.csv")?, &rep.events)?;
    Ok(())
}

fn print_trace_summary(rep: &Report, table: bool) {
    let o = &rep.options;
    println!(
        "{} over [{}, {}]: {} samples, {} labelled times",
        rep.problem.name,
        o.from,
        o.to,
        rep.samples.len(),
        rep.events.len()
    );
    for e in &rep.events {
        let reversed = match e.side_convention {
            tvsdp::classifier::SideConvention::Reversed => " (reversed time)",
            tvsdp::classifier::SideConvention::Forward => "",
        };
        let kinds: Vec<String> = e.kinds.iter().map(|k| format!("{k:?}")).collect();
        println!("  t = {:+.8}  {:?}{reversed}  [{}]", e.t, e.label, kinds.join(", "));
    }
    for a in &rep.accumulations {
        let comp: Vec<String> = a.composition.iter().map(|(l, c)| format!("{l:?} x{c}")).collect();
        println!(
            "  accumulation at t = {:+.6}: {} events ({})",
            a.limit,
            a.members.len(),
            comp.join(", ")
        );
    }
    if let Some(f) = &rep.failure {
        println!("  trace stopped early at {f}");
    }
    if table {
        print!("{}", rep.audit.render_table());
        for n in &rep.audit.notes {
            println!("note: {n}");
        }
    }
    for w in &rep.audit.warnings {
        println!("warning: {w}");
    }
    println!("audit: {}", if rep.audit.passed { "passed" } else { "warnings" });
}

#[derive(Serialize)]
struct RootRow {
    residual_norm: f64,
    x_psd: bool,
    z_psd: bool,
    sigma_min_rel: f64,
    svec_x: Vec<f64>,
    y: Vec<f64>,
    svec_z: Vec<f64>,
}

#[derive(Serialize)]
struct EnumerateOutput {
    t: f64,
    starts: usize,
    seed: u64,
    converged: usize,
    roots: Vec<RootRow>,
}

fn cmd_enumerate(source: &Source, t: f64, starts: usize, seed: u64, json: bool) -> Result<u8> {
    let (p, _) = load(source)?;
    in_horizon(&p, t)?;
    let inst = p.instantiate(t)?;
    let r = enumerate_kkt(&inst, starts, seed)?;
    let out = EnumerateOutput {
        t,
        starts,
        seed,
        converged: r.converged,
        roots: r
            .roots
            .iter()
            .map(|k| RootRow {
                residual_norm: k.residual_norm,
                x_psd: k.x_psd,
                z_psd: k.z_psd,
                sigma_min_rel: k.sigma_min_rel,
                svec_x: svec(&k.x).into_vec(),
                y: k.y.clone(),
                svec_z: svec(&k.z).into_vec(),
            })
            .collect(),
    };
    if json {
        print_json(&out)?;
    } else {
        println!(
            "{} at t = {t}: {} distinct roots from {} of {starts} converged starts (seed {seed})",
            p.name,
            out.roots.len(),
            out.converged
        );
        for (k, root) in out.roots.iter().enumerate() {
            println!(
                "  #{:<2} |F| = {:.1e}  X psd {:<5}  Z psd {:<5}  sigma_min/sigma_max = {:.2e}  y = {:?}",
                k + 1,
                root.residual_norm,
                root.x_psd,
                root.z_psd,
                root.sigma_min_rel,
                root.y.iter().map(|v| (v * 1e6).round() / 1e6).collect::<Vec<_>>()
            );
        }
    }
    Ok(0)
}

fn cmd_examples(show: Option<&str>) -> Result<u8> {
    match show {
        Some(name) => {
            let p = builtin(name)?;
            print!("{}", ProblemFile::from_problem(&p).to_toml());
        }
        None => {
            for name in builtin_names() {
                let p = builtin(name)?;
                let (a, b) = p.horizon();
                println!(
                    "{name:<4} n = {}, m = {:>2}, horizon ({a}, {b})  {}",
                    p.n(),
                    p.m(),
                    p.notes.as_deref().unwrap_or("")
                );
            }
        }
    }
    Ok(0)
}
