use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semidirect")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn records(dir: &Path) -> Vec<Value> {
    let text = std::fs::read_to_string(dir.join("reports.jsonl")).unwrap();
    text.lines().map(|l| serde_json::from_str(l).expect("valid JSON line")).collect()
}

#[test]
fn special_grushin_default_corpus_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let recs = records(dir.path());
    let reports: Vec<&Value> = recs.iter().filter(|r| r["kind"] == "diagonal").collect();
    assert_eq!(reports.len(), 24 * 25);
    assert!(reports.iter().all(|r| r["pass"] == true));
    let summary = recs.last().unwrap();
    assert_eq!(summary["kind"], "summary");
    assert_eq!(summary["failures"], 0);
    let csv = std::fs::read_to_string(dir.path().join("curves.csv")).unwrap();
    assert!(csv.starts_with("curve,t,value,predicted\n"));
    assert_eq!(csv.lines().count(), 1 + 25);
}

#[test]
fn every_family_runs_from_the_command_line() {
    for args in [
        vec!["verify", "--family", "grushin", "--alpha", "2"],
        vec!["verify", "--family", "tensor-flat"],
        vec!["verify", "--family", "defective-gaussian-flat"],
        vec!["verify", "--family", "metabelian", "--q", "1"],
    ] {
        let dir = tempfile::tempdir().unwrap();
        let mut a = args.clone();
        a.extend(["--t-points", "5", "--nodes", "48"]);
        let o = run(&a, dir.path());
        assert_eq!(code(&o), 0, "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn output_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["verify", "--seed", "7", "--t-points", "4"];
    assert_eq!(code(&run(&args, a.path())), 0);
    assert_eq!(code(&run(&args, b.path())), 0);
    let read = |d: &Path| std::fs::read(d.join("reports.jsonl")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn shown_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", "--show-config", "--t-points", "3", "--seed", "3"], dir.path());
    assert_eq!(code(&o), 0);
    let shown: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(shown["t_grid"]["points"], 3);
    assert!(shown["verify"]["corpus"].as_array().unwrap().len() >= 20);
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, stdout(&o)).unwrap();

    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let from_file = run(&["verify", "--config", path.to_str().unwrap()], &a);
    let from_flags = run(&["verify", "--t-points", "3", "--seed", "3"], &b);
    assert_eq!(code(&from_file), 0);
    assert_eq!(code(&from_flags), 0);
    assert_eq!(std::fs::read(a.join("reports.jsonl")).unwrap(), std::fs::read(b.join("reports.jsonl")).unwrap());
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    };
    let malformed = write("bad.json", "{ \"tol\": ");
    let unknown = write("unknown.json", r#"{"verify": {"nodes": 32, "extra": true}}"#);
    let mismatch = write("heat.json", r#"{"command": "heat"}"#);
    for p in [&malformed, &unknown, &mismatch] {
        let o = run(&["verify", "--config", p.to_str().unwrap()], &dir.path().join("o"));
        assert_eq!(code(&o), 2, "{}: {}", p.display(), stderr(&o));
    }
    let o = run(&["verify", "--t-min", "-1"], &dir.path().join("o"));
    assert_eq!(code(&o), 2);
    let o = run(&["verify", "--alpha", "2"], &dir.path().join("o"));
    assert_eq!(code(&o), 2, "alpha without the grushin family");
}

#[test]
fn zero_tolerance_on_a_coarse_grid_is_judged_strictly() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", "--tol", "0", "--nodes", "16", "--t-points", "5"], dir.path());
    let c = code(&o);
    assert!(c == 0 || c == 1, "{c}: {}", stderr(&o));
    let recs = records(dir.path());
    let failing = recs.iter().filter(|r| r["pass"] == false).count();
    assert_eq!(c == 1, failing > 0);
}

#[test]
fn degenerate_function_is_a_numeric_fault() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("null.json");
    std::fs::write(
        &cfg,
        r#"{"verify": {"corpus": [{"family": "bump", "center": [0.0, 0.0], "radius": [1.0, 1.0], "smoothness": 1e6}], "random_fields": 0}}"#,
    )
    .unwrap();
    let o = run(&["verify", "--config", cfg.to_str().unwrap()], &dir.path().join("o"));
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn hardy_log_reports_the_optimal_constant() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["hardy", "--log"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let recs = records(dir.path());
    let c = recs.iter().find(|r| r["kind"] == "hardy_log_constant").unwrap();
    let v = c["value"].as_f64().unwrap();
    assert!((v - (2.0 * std::f64::consts::E).sqrt()).abs() < 1e-10);
    assert!(recs.iter().any(|r| r["kind"] == "prop61"));
    assert!(stdout(&o).contains("sqrt(2e)"));
}

#[test]
fn hardy_probe_prints_the_violating_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["hardy", "--power", "--alpha", "0.5", "--probe-b", "0.533", "--t-points", "5"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("violation found on path LambdaToZero"), "{}", stdout(&o));
    let recs = records(dir.path());
    let probe = recs.iter().find(|r| r["kind"] == "uniqueness_probe").unwrap();
    assert_eq!(probe["verdict"]["violation"]["path"], "lambda_to_zero");

    let o =
        run(&["hardy", "--power", "--alpha", "0.5", "--probe-b", "0.3333333333333333", "--t-points", "5"], dir.path());
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn alpha_out_of_range() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["hardy", "--power", "--alpha", "1.2"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("alpha out of range"));
    let o = run(&["heat", "--very-degenerate", "--alpha", "1.2"], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn heat_m1_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["heat", "--m", "1"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let recs = records(dir.path());
    let fit = recs.iter().find(|r| r["kind"] == "heat_fit").unwrap();
    let e = fit["fit"]["exponent"].as_f64().unwrap();
    assert!((-1.65..=-1.35).contains(&e), "{e}");
}

#[test]
fn very_degenerate_writes_the_bound_curve() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["heat", "--very-degenerate", "--alpha", "0.5", "--nx", "41", "--ny", "81"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("curves.csv")).unwrap();
    let bound: Vec<&str> = csv.lines().filter(|l| l.starts_with("ultracontractive_bound_squared,")).collect();
    assert_eq!(bound.len(), 7);
    for line in csv.lines().filter(|l| l.starts_with("sup_diag")) {
        let cols: Vec<f64> = line.split(',').skip(1).map(|c| c.parse().unwrap()).collect();
        assert!(cols[1] <= cols[2] * (1.0 + 1e-12), "{line}");
    }
}
