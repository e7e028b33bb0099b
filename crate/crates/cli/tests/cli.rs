use std::path::Path;
use std::process::{Command, Output};

use ou_drift_bench::Table;

const BIN: &str = env!("CARGO_BIN_EXE_ou-drift-bench");

fn run(args: &[&str], threads: Option<usize>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("OU_BENCH_THREADS", t.to_string()),
        None => cmd.env_remove("OU_BENCH_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args, None);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_minimal_path_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[simulate]\nn = 4\ndelta = 0.1\n");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["simulate", "--config", &cfg, "--out", s(&a)]);
    ok(&["simulate", "--config", &cfg, "--out", s(&b)]);
    let t = Table::read(&a.join("paths.csv")).unwrap();
    assert_eq!(t.header, ["stream", "i", "t", "x"]);
    assert_eq!(t.rows.len(), 5);
    assert_eq!(t.rows[0][3], "0");
    assert_eq!(std::fs::read(a.join("paths.csv")).unwrap(), std::fs::read(b.join("paths.csv")).unwrap());
}

#[test]
fn coupled_columns_satisfy_the_coupling_identity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "theta_true = 1.5\n[simulate]\nn = 50\ndelta = 0.05\nvariant = \"stationary\"\ncoupling = true\npaths = 3\n",
    );
    ok(&["simulate", "--config", &cfg, "--out", s(dir.path())]);
    let t = Table::read(&dir.path().join("paths.csv")).unwrap();
    assert_eq!(t.header, ["stream", "i", "t", "z", "x"]);
    assert_eq!(t.rows.len(), 3 * 51);
    let f = |r: &Vec<String>, c: usize| r[c].parse::<f64>().unwrap();
    for path in t.rows.chunks(51) {
        let z0 = f(&path[0], 3);
        for r in path {
            let expect = f(r, 3) - (-1.5 * f(r, 2)).exp() * z0;
            assert!((f(r, 4) - expect).abs() < 1e-12);
        }
    }
}

#[test]
fn estimate_and_oracle_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[simulate]\nn = 2000\ndelta = 0.01\npaths = 4\n");
    ok(&["estimate", "--config", &cfg, "--out", s(dir.path()), "--index-convention", "abstract"]);
    let t = Table::read(&dir.path().join("estimates.csv")).unwrap();
    assert_eq!(t.rows.len(), 8);
    let status = t.column("status").unwrap();
    assert!(t.rows.iter().all(|r| r[status] == "ok" && r[2] == "abstract"));

    ok(&["oracle", "--preset", "coupling-sweep", "--out", s(dir.path())]);
    let t = Table::read(&dir.path().join("oracles.csv")).unwrap();
    assert_eq!(t.rows.len(), 3 * 7);
    let q = t.column("quantity").unwrap();
    assert!(t.rows.iter().any(|r| r[q] == "var_fn_z"));
}

#[test]
fn invalid_theta_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "theta_true = 0.0\n");
    let out = run(&["verify", "--config", &cfg, "--out", s(dir.path())], None);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("theta_true"), "{err}");
    assert!(!dir.path().join("checks.csv").exists());
}

#[test]
fn verify_refuses_fits_with_ten_replications() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["verify", "--reps", "10", "--out", s(dir.path())], None);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("at least 3 cells"), "{err}");
}

#[test]
fn verify_passes_and_lists_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "replications = 1000\n[schedule]\ngamma = 0.5\nlog2_n = [6, 9]\n");
    let out = run(&["verify", "--config", &cfg, "--out", s(dir.path())], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let t = Table::read(&dir.path().join("checks.csv")).unwrap();
    assert!(t.rows.iter().any(|r| r[0] == "exact_var_fn_z" && r[7] == "pass"));
    assert!(t.rows.iter().any(|r| r[0] == "coupling_spread"));
    let report = std::fs::read_to_string(dir.path().join("report.md")).unwrap();
    assert!(report.contains("exact_var_fn_z"));
}

#[test]
fn rates_preset_schema() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["rates", "--preset", "amce-gamma-half", "--estimator", "amce", "--reps", "200", "--out", s(dir.path())]);
    let rates = Table::read(&dir.path().join("rates.csv")).unwrap();
    assert_eq!(rates.rows.len(), 7);
    let n: Vec<usize> = rates.rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(n, (8..=14).map(|k| 1usize << k).collect::<Vec<_>>());
    let plot = Table::read(&dir.path().join("plotdata.csv")).unwrap();
    assert_eq!(
        plot.header,
        [
            "n",
            "delta",
            "T",
            "bound_term_1",
            "bound_term_2",
            "w1",
            "w1_se",
            "kolmogorov",
            "estimator",
            "slope",
            "intercept",
            "r2"
        ]
    );
    let report = std::fs::read_to_string(dir.path().join("report.md")).unwrap();
    assert!(report.contains("Theorem addressed"));
    assert!(report.contains("minimum contrast"));
}

#[test]
fn rates_rejects_fixed_horizon_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["rates", "--preset", "negative-control-fixed-T", "--reps", "100", "--out", s(dir.path())], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "replications = 300\n[schedule]\ngamma = 0.5\nlog2_n = [6, 8]\n");
    let (a, b) = (dir.path().join("one"), dir.path().join("many"));
    for (out, threads) in [(&a, 1), (&b, 4)] {
        let o = run(&["rates", "--config", &cfg, "--out", s(out)], Some(threads));
        assert!(o.status.success());
    }
    for f in ["cells.csv", "rates.csv", "plotdata.csv", "report.md"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn bad_thread_env_is_an_error() {
    let out = Command::new(BIN)
        .args(["oracle", "--out", "/nonexistent-dir-x"])
        .env("OU_BENCH_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn estimate_uses_observed_paths_under_coupling() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[simulate]\nn = 500\ndelta = 0.02\nvariant = \"stationary\"\ncoupling = true\npaths = 2\n",
    );
    ok(&["estimate", "--config", &cfg, "--out", s(dir.path())]);
    let t = Table::read(&dir.path().join("estimates.csv")).unwrap();
    assert_eq!(t.rows.len(), 4);
}
