//! Acceptance suite. Runs without the libtest harness so that every criterion
//! prints one PASS/FAIL line in `cargo test` output; exits non-zero on any FAIL.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tvsdp::classifier::{classify_trajectory, ClassifyOptions, SideConvention};
use tvsdp::ipm::solve;
use tvsdp::kkt::{enumerate_kkt, jacobian_matrix, pack, residual_parts, unpack, NONSINGULAR_REL};
use tvsdp::model::{builtin, interior_grid};
use tvsdp::symlin::{skron, skron_general, smat, svec, SVec};
use tvsdp::tracer::{one_sided_derivative, predict, sample_at, Side, CERT_TOL, DERIV_DELTA};
use tvsdp::{ClassifiedTrajectory, Label, Mat, SymMat, TraceOptions, TvSdpProblem};

/// Event resolution used for every classification run.
const RES: f64 = 1e-4;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

fn problem(name: &str) -> TvSdpProblem {
    builtin(name).expect("built-in example")
}

fn classify(name: &str, from: f64, to: f64) -> ClassifiedTrajectory {
    let opts = ClassifyOptions::new(TraceOptions::new(from, to).with_resolution(RES));
    classify_trajectory(&problem(name), &opts).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn sym3(rows: [[f64; 3]; 3]) -> SymMat {
    SymMat::from_fn(3, |i, j| rows[i][j])
}

fn max_diff(a: &SymMat, b: &SymMat) -> f64 {
    a.sub(b).max_abs()
}

fn solve_x(p: &TvSdpProblem, t: f64) -> SymMat {
    let inst = p.instantiate(t).expect("t in horizon");
    solve(&inst, None).expect("solver converges").point.x
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let p = problem("P1");
    let cayley = |x: f64, y: f64, z: f64| sym3([[1.0, x, y], [x, 1.0, z], [y, z, 1.0]]);
    let mut worst_smooth: f64 = 0.0;
    let mut points = 0;
    for t in linspace(-2.0, 2.0, 102).into_iter().skip(1).take(100) {
        if t.abs() <= 0.02 {
            continue;
        }
        let want = cayley(-t / 2.0, -t / 2.0, t * t / 2.0 - 1.0);
        worst_smooth = worst_smooth.max(max_diff(&solve_x(&p, t), &want));
        points += 1;
    }
    let mut worst_ones: f64 = 0.0;
    for t in linspace(-2.95, -2.0, 20) {
        worst_ones = worst_ones.max(max_diff(&solve_x(&p, t), &cayley(1.0, 1.0, 1.0)));
    }
    let elapsed = start.elapsed();
    Outcome::new(
        worst_smooth <= 1e-6 && worst_ones <= 1e-6 && elapsed <= Duration::from_secs(10),
        format!(
            "{points} grid points, max error {worst_smooth:.2e} on (-2,2), {worst_ones:.2e} on (-3,-2], {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2() -> Outcome {
    let d = problem("D1");
    let left = |t: f64| {
        sym3([
            [-t, t / 2.0, t / 2.0],
            [t / 2.0, -(t + 1.0) / 2.0, 0.5],
            [t / 2.0, 0.5, -(t + 1.0) / 2.0],
        ])
    };
    let right = |t: f64| {
        sym3([
            [t * t / 2.0, t / 2.0, t / 2.0],
            [t / 2.0, 0.5, 0.5],
            [t / 2.0, 0.5, 0.5],
        ])
    };
    let mut worst: f64 = 0.0;
    for t in linspace(-2.95, -2.02, 20) {
        worst = worst.max(max_diff(&solve_x(&d, t), &left(t)));
    }
    for t in linspace(-1.98, 1.95, 40) {
        worst = worst.max(max_diff(&solve_x(&d, t), &right(t)));
    }
    let want_l = sym3([[-1.0, 0.5, 0.5], [0.5, -0.5, 0.0], [0.5, 0.0, -0.5]]);
    let want_r = sym3([[-2.0, 0.5, 0.5], [0.5, 0.0, 0.0], [0.5, 0.0, 0.0]]);
    let dl = one_sided_derivative(&d, -2.0, Side::Left, DERIV_DELTA).expect("left derivative");
    let dr = one_sided_derivative(&d, -2.0, Side::Right, DERIV_DELTA).expect("right derivative");
    let (el, er) = (max_diff(&dl, &want_l), max_diff(&dr, &want_r));
    Outcome::new(
        worst <= 1e-6 && el <= 1e-3 && er <= 1e-3,
        format!("closed form error {worst:.2e}; derivative errors at -2: left {el:.2e}, right {er:.2e}"),
    )
}

/// `(x, y, z, α, β, γ)` with `X = [[1, x, y], [x, 1, z], [y, z, 1]]` and
/// `Z = [[-α, ·, ·], [·, -β, ·], [·, ·, -γ]]`.
fn cayley_coordinates(x: &SymMat, z: &SymMat) -> [f64; 6] {
    [x.get(0, 1), x.get(0, 2), x.get(1, 2), -z.get(0, 0), -z.get(1, 1), -z.get(2, 2)]
}

fn criterion_3() -> Outcome {
    let h = -0.5;
    let listed: [[f64; 6]; 8] = [
        [h, h, h, h, h, h],
        [1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
        [1.0, 1.0, -2.0, 1.0, h, h],
        [-1.0, -1.0, 1.0, -1.0, 0.0, 0.0],
        [1.0, -2.0, 1.0, h, 1.0, h],
        [-1.0, 1.0, -1.0, 0.0, -1.0, 0.0],
        [-2.0, 1.0, 1.0, h, h, 1.0],
        [1.0, -1.0, -1.0, 0.0, 0.0, -1.0],
    ];
    let inst = problem("P1").instantiate(1.0).expect("t = 1 in horizon");
    let rep = enumerate_kkt(&inst, 2000, 42).expect("enumeration runs");
    let found: Vec<[f64; 6]> = rep.roots.iter().map(|r| cayley_coordinates(&r.x, &r.z)).collect();
    let close = |a: &[f64; 6], b: &[f64; 6]| a.iter().zip(b).all(|(u, v)| (u - v).abs() <= 1e-6);
    let matched = listed.iter().filter(|l| found.iter().filter(|f| close(f, l)).count() == 1).count();
    let min_sigma = rep.roots.iter().map(|r| r.sigma_min_rel).fold(f64::INFINITY, f64::min);
    let psd: Vec<&[f64; 6]> = rep
        .roots
        .iter()
        .zip(&found)
        .filter(|(r, _)| r.x_psd && r.z_psd)
        .map(|(_, f)| f)
        .collect();
    let psd_ok = psd.len() == 1 && close(psd[0], &listed[0]);
    Outcome::new(
        rep.roots.len() == 8 && matched == 8 && min_sigma >= 1e-6 && psd_ok,
        format!(
            "{} roots, {matched}/8 listed roots matched, min sigma_min_rel {min_sigma:.2e}, {} PSD-PSD root(s)",
            rep.roots.len(),
            psd.len()
        ),
    )
}

struct Expected {
    name: &'static str,
    from: f64,
    to: f64,
    at: f64,
    tol: f64,
    label: Label,
    convention: Option<SideConvention>,
}

fn check_label(c: &ClassifiedTrajectory, e: &Expected) -> (bool, String) {
    let got = c.label_at(e.at, e.tol);
    let convention = c
        .labeled_events
        .iter()
        .filter(|le| (le.t - e.at).abs() <= e.tol)
        .min_by(|a, b| (a.t - e.at).abs().total_cmp(&(b.t - e.at).abs()))
        .map(|le| le.point_type.side_convention);
    let ok = got == Some(e.label) && e.convention.map_or(true, |want| convention == Some(want));
    let shown = match (got, convention) {
        (Some(l), Some(SideConvention::Reversed)) => format!("{l:?} (reversed)"),
        (Some(l), _) => format!("{l:?}"),
        (None, _) => "none".to_string(),
    };
    (ok, format!("{}@{}: {shown}", e.name, e.at))
}

fn run_table(rows: &[Expected]) -> (bool, Vec<String>, usize, Vec<ClassifiedTrajectory>) {
    let mut ok = true;
    let mut lines = Vec::new();
    let mut unknown = 0;
    let mut runs: Vec<(&str, f64, f64, ClassifiedTrajectory)> = Vec::new();
    for e in rows {
        let idx = match runs.iter().position(|r| r.0 == e.name && r.1 == e.from && r.2 == e.to) {
            Some(i) => i,
            None => {
                let c = classify(e.name, e.from, e.to);
                unknown += c.count(Label::Unknown);
                runs.push((e.name, e.from, e.to, c));
                runs.len() - 1
            }
        };
        let (pass, line) = check_label(&runs[idx].3, e);
        ok &= pass;
        lines.push(line);
    }
    (ok && unknown == 0, lines, unknown, runs.into_iter().map(|r| r.3).collect())
}

fn criterion_4() -> (Outcome, ClassifiedTrajectory) {
    use Label::*;
    let row = |name, from, to, at, tol, label, convention| Expected {
        name,
        from,
        to,
        at,
        tol,
        label,
        convention,
    };
    let rows = [
        row("P1", -2.9, 1.9, -2.0, 1e-3, NonDifferentiable, None),
        row("P1", -2.9, 1.9, 0.0, 1e-3, DiscontinuousIsolatedMultiple, None),
        row("P2", -1.9, 0.9, 0.0, 1e-3, DiscontinuousNonIsolatedMultiple, None),
        row("P3", -0.9, 0.9, 0.0, 1e-3, ContinuousBifurcation, Some(SideConvention::Reversed)),
        row("D3", -0.9, 0.9, 0.0, 1e-3, ContinuousBifurcation, Some(SideConvention::Forward)),
        row("P4", -0.9, 0.9, 0.0, 1e-2, IrregularAccumulation, None),
        row("P5", -0.9, 0.9, 0.0, 1e-2, IrregularAccumulation, None),
    ];
    let start = Instant::now();
    let (ok, lines, unknown, mut runs) = run_table(&rows);
    let elapsed = start.elapsed();
    let outcome = Outcome::new(
        ok && elapsed <= Duration::from_secs(60),
        format!("{}; {unknown} Unknown; {:.1} s", lines.join(", "), elapsed.as_secs_f64()),
    );
    (outcome, runs.swap_remove(0))
}

fn criterion_5() -> Outcome {
    use Label::*;
    let labels = [
        Regular,
        NonDifferentiable,
        DiscontinuousIsolatedMultiple,
        DiscontinuousNonIsolatedMultiple,
        ContinuousBifurcation,
        IrregularAccumulation,
    ];
    let rows: Vec<Expected> = ["LP1", "LP2", "LP3", "LP4", "LP5", "LP6"]
        .into_iter()
        .zip(labels)
        .map(|(name, label)| Expected {
            name,
            from: -0.9,
            to: 0.9,
            at: 0.0,
            tol: 1e-2,
            label,
            convention: None,
        })
        .collect();
    let (ok, lines, unknown, _) = run_table(&rows);
    Outcome::new(ok, format!("{}; {unknown} Unknown", lines.join(", ")))
}

fn criterion_6(p1: &ClassifiedTrajectory) -> Outcome {
    use Label::*;
    let allowed = [Regular, NonDifferentiable, DiscontinuousIsolatedMultiple];
    let stray: Vec<Label> = p1
        .summary
        .iter()
        .filter(|(l, c)| **c > 0 && !allowed.contains(l))
        .map(|(l, _)| *l)
        .collect();
    let times = p1.irregular_times();
    let at = |target: f64| times.iter().any(|t| (t - target).abs() <= 1e-4);
    Outcome::new(
        stray.is_empty() && times.len() == 2 && at(-2.0) && at(0.0),
        format!("labels outside the permitted set: {stray:?}; non-regular times {times:?}"),
    )
}

fn ladder(name: &str, label: Label) -> (bool, String) {
    let c = classify(name, 0.051, 1.05);
    let missing: Vec<usize> = (1..=19)
        .filter(|&k| {
            let t = 1.0 / k as f64;
            c.label_at(t, 10.0 * RES) != Some(label)
        })
        .collect();
    let ok = missing.is_empty();
    (
        ok,
        format!(
            "{name}: {}/19 of t = 1/k labelled {label:?}{}",
            19 - missing.len(),
            if ok { String::new() } else { format!(" (missing k = {missing:?})") }
        ),
    )
}

fn criterion_7() -> Outcome {
    let (a, la) = ladder("P4", Label::DiscontinuousIsolatedMultiple);
    let (b, lb) = ladder("P5", Label::ContinuousBifurcation);
    Outcome::new(a && b, format!("{la}; {lb}"))
}

fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> SymMat {
    SymMat::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
}

fn random_mat(rng: &mut ChaCha8Rng, n: usize) -> Mat {
    Mat::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0))
}

fn svec_properties(rng: &mut ChaCha8Rng) -> (bool, String) {
    let mut worst_trip: f64 = 0.0;
    let mut worst_inner: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.gen_range(1..=6);
        let (a, b) = (random_sym(rng, n), random_sym(rng, n));
        worst_trip = worst_trip.max(max_diff(&smat(&svec(&a)), &a));
        worst_inner = worst_inner.max((svec(&a).dot(&svec(&b)) - a.inner(&b)).abs());
    }
    (
        worst_trip <= 1e-12 && worst_inner <= 1e-12,
        format!("svec round trip {worst_trip:.1e}, inner product {worst_inner:.1e}"),
    )
}

fn skron_properties(rng: &mut ChaCha8Rng) -> (bool, String) {
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let n = 1 + k % 5;
        let h = random_sym(rng, n);
        let (a, b) = (random_mat(rng, n), random_mat(rng, n));
        let ahb = a.matmul(&h.to_mat()).matmul(&b.transpose());
        let bha = b.matmul(&h.to_mat()).matmul(&a.transpose());
        let want = SymMat::from_fn(n, |i, j| 0.5 * (ahb[(i, j)] + bha[(i, j)]));
        let got = skron_general(&a, &b).expect("square").matvec(svec(&h).as_slice());
        let got = smat(&SVec::new(got).expect("svec length"));
        worst = worst.max(max_diff(&got, &want));
        let (sa, sb) = (random_sym(rng, n), random_sym(rng, n));
        let want = sa.to_mat().matmul(&h.to_mat()).matmul(&sb.to_mat());
        let want = SymMat::from_fn(n, |i, j| 0.5 * (want[(i, j)] + want[(j, i)]));
        let got = skron(&sa, &sb).expect("same size").matvec(svec(&h).as_slice());
        worst = worst.max(max_diff(&smat(&SVec::new(got).expect("svec length")), &want));
    }
    (worst <= 1e-10, format!("skron action law on 100 triples {worst:.1e}"))
}

fn jacobian_properties(rng: &mut ChaCha8Rng) -> (bool, String) {
    let mut worst: f64 = 0.0;
    for name in tvsdp::model::builtin_names() {
        let p = problem(name);
        let (lo, hi) = p.horizon();
        for _ in 0..20 {
            let inst = p.instantiate(rng.gen_range(lo + 0.01..hi - 0.01)).expect("in horizon");
            let (n, m) = (inst.n(), inst.m());
            let (x, z) = (random_sym(rng, n), random_sym(rng, n));
            let y: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let w = pack(&x, &y, &z);
            let f = |w: &[f64]| {
                let (x, y, z) = unpack(w, n, m).expect("packed sizes");
                residual_parts(&inst, &x, &y, &z).expect("residual").to_vec()
            };
            let j = jacobian_matrix(&inst, &x, &z).expect("jacobian");
            let h = 1e-6;
            let mut fd = Mat::zeros(j.rows(), j.cols());
            for k in 0..w.len() {
                let (mut wp, mut wm) = (w.clone(), w.clone());
                wp[k] += h;
                wm[k] -= h;
                let col: Vec<f64> = f(&wp).iter().zip(f(&wm)).map(|(a, b)| (a - b) / (2.0 * h)).collect();
                fd.set_column(k, &col);
            }
            worst = worst.max(fd.sub(&j).max_abs() / j.max_abs().max(1.0));
        }
    }
    (worst <= 1e-5, format!("J_F vs finite differences {worst:.1e} relative"))
}

/// Within a factor of ten of its decision threshold.
fn borderline(value: f64, threshold: f64) -> bool {
    value.abs() >= threshold / 10.0 && value.abs() <= threshold * 10.0
}

fn regularity_equivalence() -> (bool, String) {
    let (mut agree, mut logged, mut failed) = (0, Vec::new(), Vec::new());
    for name in ["P1", "P2", "P3", "P4", "P5", "D1", "D3"] {
        let p = problem(name);
        let (lo, hi) = p.horizon();
        for t in interior_grid(lo, hi, 50) {
            let s = sample_at(&p, t).expect("optimal sample");
            let c = &s.certificate;
            if c.jacobian_nonsingular == c.is_regular() {
                agree += 1;
                continue;
            }
            let near = borderline(c.sigma_min_rel, NONSINGULAR_REL)
                || borderline(c.primal_margin, CERT_TOL)
                || borderline(c.dual_margin, CERT_TOL)
                || borderline(c.complementarity_margin, CERT_TOL);
            let entry = format!("{name}@{t:.3}");
            if near {
                logged.push(entry);
            } else {
                failed.push(entry);
            }
        }
    }
    for entry in &logged {
        println!("      note: borderline Jacobian/regularity mismatch at {entry}");
    }
    (
        failed.is_empty(),
        format!(
            "Jacobian test vs complementarity + non-degeneracy: {agree} agree, {} borderline, {} mismatched{}",
            logged.len(),
            failed.len(),
            if failed.is_empty() { String::new() } else { format!(" {failed:?}") }
        ),
    )
}

fn predictor_properties() -> (bool, String) {
    let mut worst = f64::INFINITY;
    for (name, t) in [("P1", 1.0), ("P1", -2.5), ("D1", 0.7)] {
        let p = problem(name);
        let s = sample_at(&p, t).expect("sample");
        let err = |dt: f64| {
            let inst = p.instantiate(t + dt).expect("in horizon");
            let guess = predict(&s, &inst, dt).expect("regular sample");
            max_diff(&guess.x, &sample_at(&p, t + dt).expect("sample").point.x)
        };
        worst = worst.min(err(0.1) / err(0.05));
    }
    (worst >= 3.0, format!("predictor error ratio under dt halving >= {worst:.2}"))
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let parts = [
        svec_properties(&mut rng),
        skron_properties(&mut rng),
        jacobian_properties(&mut rng),
        regularity_equivalence(),
        predictor_properties(),
    ];
    Outcome::new(
        parts.iter().all(|p| p.0),
        parts.iter().map(|p| p.1.as_str()).collect::<Vec<_>>().join("; "),
    )
}

fn report(failures: &mut usize, n: usize, title: &str, o: Outcome) {
    if !o.pass {
        *failures += 1;
    }
    println!("{} [{n}] {title}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
}

fn main() -> ExitCode {
    // `cargo test -- --list` and filters are accepted and ignored.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let mut failures = 0;
    report(&mut failures, 1, "P1 trajectory", criterion_1());
    report(&mut failures, 2, "D1 trajectory", criterion_2());
    report(&mut failures, 3, "KKT enumeration at t = 1", criterion_3());
    let (table, p1) = criterion_4();
    report(&mut failures, 4, "classification table", table);
    report(&mut failures, 5, "LP suite", criterion_5());
    report(&mut failures, 6, "P1 taxonomy audit", criterion_6(&p1));
    report(&mut failures, 7, "P4/P5 event ladder", criterion_7());
    report(&mut failures, 8, "property suites", criterion_8());
    println!("acceptance: {} passed, {failures} failed", 8 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
