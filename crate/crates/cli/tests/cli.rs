use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tvsdp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tvsdp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn examples_lists_every_builtin() {
    let o = tvsdp(&["examples"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    for name in ["P1", "P5", "D1", "D3", "LP1", "LP6"] {
        assert!(out.lines().any(|l| l.starts_with(name)), "{name} missing:\n{out}");
    }
}

#[test]
fn builtin_p1_passes_checks() {
    let o = tvsdp(&["check", "--example", "P1"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAILED"));
}

#[test]
fn exported_example_reloads_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = tvsdp(&["examples", "--show", "P1"]);
    assert_eq!(code(&o), 0);
    let path = write(dir.path(), "p1.toml", &stdout(&o));
    let from_file = tvsdp(&["solve", "--file", &path, "--at", "1", "--json"]);
    let builtin = tvsdp(&["solve", "--example", "P1", "--at", "1", "--json"]);
    assert_eq!(code(&from_file), 0);
    assert_eq!(stdout(&from_file), stdout(&builtin));
}

#[test]
fn duplicated_constraint_fails_licq() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "dup.toml",
        r#"
name = "duplicated"
n = 2
m = 2
horizon = [-1.0, 1.0]
C = [["1", "0"], ["1"]]
A = [[["1", "0"], ["0"]], [["1", "0"], ["0"]]]
b = ["1", "1"]
"#,
    );
    let o = tvsdp(&["check", "--file", &path]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("LICQ                FAILED"));
}

#[test]
fn discontinuous_rhs_fails_continuity() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "jump.toml",
        r#"
name = "jump"
n = 2
m = 1
horizon = [-1.0, 1.0]
C = [["1", "0"], ["1"]]
A = [[["1", "0"], ["1"]]]
b = ["piecewise(t < 0: 1, else: 2)"]
"#,
    );
    let o = tvsdp(&["check", "--file", &path]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("data continuity     FAILED"));
}

#[test]
fn malformed_file_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "bad.toml", "name = \"x\"\nn = [\n");
    let o = tvsdp(&["check", "--file", &path]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));
}

#[test]
fn usage_errors_exit_four() {
    assert_eq!(code(&tvsdp(&["check", "--example", "P9"])), 4);
    assert_eq!(code(&tvsdp(&["trace"])), 4);
    assert_eq!(code(&tvsdp(&["enumerate", "--example", "P1", "--at", "2.5"])), 4);
    assert_eq!(code(&tvsdp(&["trace", "--example", "P1", "--from", "1", "--to", "0"])), 4);
}

#[test]
fn enumerate_reports_what_it_finds() {
    let o = tvsdp(&["enumerate", "--example", "P1", "--at", "1", "--starts", "10", "--json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let roots = v["roots"].as_array().unwrap();
    assert!(!roots.is_empty() && roots.len() <= 8);
    assert_eq!(v["starts"], 10);
}

#[test]
fn trace_p1_writes_a_reproducible_report() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let o = tvsdp(&[
            "trace", "--example", "P1", "--from", "-2.9", "--to", "1.9", "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", stdout(&o));
        out
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["report.json", "samples.csv", "trajectory.csv", "events.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let rep: serde_json::Value =
        serde_json::from_slice(&fs::read(a.join("report.json")).unwrap()).unwrap();
    assert_eq!(rep["schema_version"], 1);
    assert_eq!(rep["options"]["resolution"], 1e-4);
    let labels: Vec<&str> = rep["events"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["label"].as_str().unwrap())
        .collect();
    assert_eq!(labels, ["NonDifferentiable", "DiscontinuousIsolatedMultiple"]);
    assert_eq!(rep["audit"]["passed"], true);
    let csv = fs::read_to_string(a.join("samples.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("t,svec_x_1,"));
    assert!(header.ends_with("sigma_min_rel,multiplicity_range"));
    let times: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(times.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn trace_lp5_defaults_to_the_inner_horizon() {
    let o = tvsdp(&["trace", "--example", "LP5", "--json"]);
    assert_eq!(code(&o), 0);
    let rep: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rep["options"]["from"], -0.9);
    assert_eq!(rep["options"]["to"], 0.9);
    let events = rep["events"].as_array().unwrap();
    assert_eq!(events.len(), 1);
    assert_eq!(events[0]["label"], "ContinuousBifurcation");
}

#[test]
fn classify_prints_audit_table() {
    let o = tvsdp(&["classify", "--example", "P3"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("ContinuousBifurcation (reversed time)"), "{out}");
    assert!(out.contains("type of point"));
}
