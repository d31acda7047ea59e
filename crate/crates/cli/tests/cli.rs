use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_compute-market"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn cfg(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

#[test]
fn equilibrium_at_the_calibration_point() {
    let o = run(&["equilibrium", "--config", &cfg("calibration.toml")]);
    assert!(o.status.success());
    let out = stdout(&o);
    // (c_e - c_d) / (0.99^3 * 53)
    let expect = 1.0 / (0.99f64.powi(3) * 53.0);
    let line = out.lines().find(|l| l.starts_with("p_v=")).unwrap();
    let shown: f64 = line["p_v=".len()..].parse().unwrap();
    assert!((shown - expect).abs() < 1e-7);
    assert!(line.starts_with("p_v=0.0194"));
    assert_eq!(line, "p_v=0.0194455");
    // The worst-case calibration violates c_d > 0 and pi_r > c_e.
    assert!(stderr(&o).contains("warning: constraint violated: c_d > 0"));
}

#[test]
fn legacy_ne_prints_the_table_and_verdict() {
    let o = run(&["legacy-ne", "--config", &cfg("legacy.toml")]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("(0.549500, 0.348500)"));
    assert!(out.contains("(-73.9009, 74.8989)"));
    assert!(out.contains("equilibrium: true\n"));
    assert!(out.contains("M=0"));
    assert_eq!(out, stdout(&run(&["legacy-ne"])));
}

#[test]
fn derivative_curve_crosses_zero_at_the_optimal_p_a() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "dump-derivative-curve",
        "--config",
        &cfg("worst_case.toml"),
        "--n",
        "1,2,3,4",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("derivative_curve.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,p_a,derivative"));
    let rows: Vec<(u32, f64, f64)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (
                f[0].parse().unwrap(),
                f[1].parse().unwrap(),
                f[2].parse().unwrap(),
            )
        })
        .collect();
    let expected = [(1, 0.5), (2, 0.8047), (3, 0.9032), (4, 0.943)];
    for (n, root) in expected {
        let curve: Vec<_> = rows.iter().filter(|r| r.0 == n).collect();
        let crossing = curve
            .windows(2)
            .find(|w| w[0].2 > 0.0 && w[1].2 <= 0.0)
            .map(|w| w[1].1)
            .unwrap_or_else(|| panic!("no crossing for n={n}"));
        assert!((crossing - root).abs() < 2e-3, "n={n}: {crossing}");
    }
    assert!(stderr(&o).contains("n=4 root=0.943"));
}

#[test]
fn simulate_writes_deterministic_outputs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = run(&[
            "simulate",
            "--config",
            &cfg("honest.toml"),
            "--seed",
            "3",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for name in ["trace.csv", "metrics.txt"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs");
    }
    let metrics = fs::read_to_string(a.path().join("metrics.txt")).unwrap();
    assert!(metrics.contains("seed=3\n"));
    assert!(metrics.contains("closed=10\n"));
    assert!(metrics.contains("mediations=0\n"));
    assert!(metrics.contains("conservation_residual=0\n"));
    let trace = fs::read_to_string(a.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("block,index,event,job_id,fields\n"));
}

#[test]
fn sweep_writes_rows_in_grid_order() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "sweep",
        "--config",
        &cfg("honest.toml"),
        "--grid",
        "n=1,2,3,4",
        "--grid",
        "theta=0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with("n,theta,jobs,"));
    let col = lines[0]
        .split(',')
        .position(|h| h == "pred_min_optimal_pa")
        .unwrap();
    let first: f64 = lines[1].split(',').nth(col).unwrap().parse().unwrap();
    let last: f64 = lines[4].split(',').nth(col).unwrap().parse().unwrap();
    assert!((first - 0.5).abs() < 1e-6);
    assert!((last - 0.943).abs() < 5e-4);
}

#[test]
fn analyze_prints_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "analyze",
        "--config",
        &cfg("calibration.toml"),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("jc_type="));
    let outcomes = fs::read_to_string(dir.path().join("outcomes.csv")).unwrap();
    // 7 outcomes x 3 players plus the header.
    assert_eq!(outcomes.lines().count(), 22);
    assert!(dir.path().join("utilities.csv").exists());
}

#[test]
fn errors_exit_one_with_a_machine_readable_line() {
    let o = run(&[
        "sweep",
        "--config",
        &cfg("honest.toml"),
        "--grid",
        "bogus=1,2",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(
        err.starts_with("error: kind=UnknownField message="),
        "{err}"
    );
    assert_eq!(err.lines().count(), 1);

    let o = run(&["equilibrium", "--config", "/nonexistent/params.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: kind=Io "));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "theta = 1.0\nsurprise = 2\n").unwrap();
    let o = run(&["equilibrium", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: kind=ConfigInvalid "));
}

#[test]
fn usage_errors_print_the_grammar() {
    let o = run(&["simulate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage: compute-market simulate --config <CONFIG>"));
    let o = run(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("dump-derivative-curve"));
}
