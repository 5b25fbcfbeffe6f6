use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const MODEL: &str = "2 2\n# P\n0.7 0.3\n0.4 0.6\n# B\n0.8 0.2\n0.3 0.7\n# pi0\n0.5 0.5\n";

fn hmm2s(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hmm2s"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("model.txt"), MODEL).unwrap();
    dir
}

#[test]
fn validate_example_model() {
    let dir = setup();
    let out = hmm2s(&["validate", "--model", "model.txt"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "valid");
}

#[test]
fn validate_rejects_bad_rows_with_line_number() {
    let dir = setup();
    fs::write(dir.path().join("bad.txt"), MODEL.replace("0.4 0.6", "0.4 0.7")).unwrap();
    let out = hmm2s(&["validate", "--model", "bad.txt"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));
}

#[test]
fn validate_reports_assumption_failures() {
    let dir = setup();
    // Identical sensor rows: B loses rank.
    fs::write(dir.path().join("flat.txt"), MODEL.replace("0.3 0.7", "0.8 0.2")).unwrap();
    let out = hmm2s(&["validate", "--model", "flat.txt"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = hmm2s(&["validate", "--model", "flat.txt", "--level", "structural"], dir.path());
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn simulate_then_estimate_round_trip() {
    let dir = setup();
    let out = hmm2s(&["simulate", "--model", "model.txt", "-n", "50000", "--seed", "7", "-o", "obs.txt"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let labels = fs::read_to_string(dir.path().join("obs.txt")).unwrap();
    assert_eq!(labels.lines().filter(|l| !l.starts_with('#')).count(), 50_001);

    for method in ["mm", "2s", "em", "em-mm", "em-true"] {
        let out = hmm2s(&["estimate", "--method", method, "--model", "model.txt", "--obs", "obs.txt"], dir.path());
        assert_eq!(out.status.code(), Some(0), "{method}: {}", String::from_utf8_lossy(&out.stderr));
        let text = stdout(&out);
        let rmse: f64 = text
            .lines()
            .find_map(|l| l.strip_prefix("rmse = "))
            .expect("rmse printed")
            .parse()
            .unwrap();
        assert!(rmse < 0.05, "{method}: rmse {rmse}");
    }
    let out = hmm2s(
        &["estimate", "--method", "2s", "--model", "model.txt", "--obs", "obs.txt", "--format", "csv"],
        dir.path(),
    );
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
    assert!(lines[1].starts_with("2S,"));
}

#[test]
fn simulate_is_seeded() {
    let dir = setup();
    let a = stdout(&hmm2s(&["simulate", "--model", "model.txt", "-n", "200", "--seed", "3"], dir.path()));
    let b = stdout(&hmm2s(&["simulate", "--model", "model.txt", "-n", "200", "--seed", "3"], dir.path()));
    let c = stdout(&hmm2s(&["simulate", "--model", "model.txt", "-n", "200", "--seed", "4"], dir.path()));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn estimate_with_explicit_bounds_and_kkt_dump() {
    let dir = setup();
    hmm2s(&["simulate", "--model", "model.txt", "-n", "5000", "-o", "obs.txt"], dir.path());
    fs::write(dir.path().join("lower.txt"), "2 2\n0.5 0.1\n0.2 0.4\n").unwrap();
    let out = hmm2s(
        &["estimate", "--method", "mm", "--model", "model.txt", "--obs", "obs.txt", "--lower-bound", "lower.txt"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = hmm2s(
        &[
            "estimate", "--method", "mm", "--model", "model.txt", "--obs", "obs.txt", "--bound", "0.05,0.04",
            "--dump-kkt", "kkt.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(fs::read_to_string(dir.path().join("kkt.csv")).unwrap().lines().count() > 1);
    let out = hmm2s(
        &["estimate", "--method", "mm", "--model", "model.txt", "--obs", "obs.txt", "--bound", "0.1,0.1,0.1"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn input_and_numerical_errors_have_distinct_exit_codes() {
    let dir = setup();
    let out = hmm2s(&["estimate", "--method", "newton", "--model", "model.txt", "--obs", "x.txt"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = hmm2s(&["estimate", "--model", "model.txt", "--obs", "missing.txt"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    fs::write(dir.path().join("obs.txt"), "1\n3\n").unwrap();
    let out = hmm2s(&["estimate", "--model", "model.txt", "--obs", "obs.txt"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    // A sensor that never emits symbol 2 from state 1 and a chain stuck in state 1.
    let stuck = "2 2\n1 0\n0 1\n1 0\n0.5 0.5\n1 0\n";
    fs::write(dir.path().join("stuck.txt"), stuck).unwrap();
    fs::write(dir.path().join("obs2.txt"), "1\n2\n1\n").unwrap();
    let out = hmm2s(
        &["estimate", "--method", "em-true", "--model", "stuck.txt", "--obs", "obs2.txt", "--bound", "0.1"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let out = hmm2s(&["bogus"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn moments_csv() {
    let dir = setup();
    let out = hmm2s(&["moments", "--model", "model.txt"], dir.path());
    let text = stdout(&out);
    let rows: Vec<Vec<f64>> = text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 2);
    let total: f64 = rows.iter().flatten().sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn benchmark_schema_from_flags_and_config() {
    let dir = setup();
    let out = hmm2s(
        &["benchmark", "--x", "2", "--y", "2", "--reps", "3", "--sizes", "1e3,1e4", "--arms", "mm,2s", "-o", "sweep.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines.iter().all(|l| l.split(',').count() == 11));
    assert!(dir.path().join("sweep_raw.csv").exists());

    fs::write(dir.path().join("bench.cfg"), "x = 2\ny = 2\nreps = 2\nsizes = 500\narms = mm\noutput = cfg.csv\n").unwrap();
    let out = hmm2s(&["benchmark", "--config", "bench.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read_to_string(dir.path().join("cfg.csv")).unwrap().lines().count(), 2);

    fs::write(dir.path().join("broken.cfg"), "x = 2\nreps 2\n").unwrap();
    let out = hmm2s(&["benchmark", "--config", "broken.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}
