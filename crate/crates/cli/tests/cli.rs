use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn steerscan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_steerscan"))
        .args(args)
        .env_remove("STEERSCAN_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn state_vacuum_is_separable() {
    let o = steerscan(&["state", "1", "1", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("entangled          no"), "{s}");
    assert!(s.contains("purity             1.000000000"));
}

#[test]
fn state_reports_entanglement() {
    let s = stdout(&steerscan(&["state", "0.5", "0.8", "0"]));
    assert!(s.contains("entangled          yes"), "{s}");
}

#[test]
fn standard_form_round_trip_printed() {
    let s = stdout(&steerscan(&["state", "0.5", "1", "1", "--standard-form"]));
    assert!(s.contains("standard-form input matrix"));
    assert!(s.contains("gamma = 0.500000000"), "{s}");
    assert!(s.contains("pure state"));
}

#[test]
fn fock_summary_lists_vacuum_weight() {
    let s = stdout(&steerscan(&["state", "1", "1", "0", "--fock-summary", "--cutoff", "4", "--top", "1"]));
    assert!(s.contains("trace deficit"), "{s}");
}

#[test]
fn gaussian_steer_exit_codes() {
    assert_eq!(steerscan(&["steer", "0.5", "1", "1", "--criterion", "gaussian"]).status.code(), Some(0));
    assert_eq!(steerscan(&["steer", "1", "1", "1", "--criterion", "gaussian"]).status.code(), Some(1));
}

#[test]
fn single_bob_operator_warns_and_never_detects() {
    let o = steerscan(&["steer", "0.5", "1", "1", "--criterion", "min-variance", "--n", "4", "--nprime", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("cannot be violated"));
}

#[test]
fn linear_point_values() {
    let o = steerscan(&["steer", "0.7", "0.6", "1", "--criterion", "linear", "--n", "2", "--nprime", "2"]);
    assert_eq!(o.status.code(), Some(1));
    let s = stdout(&o);
    assert!(s.contains("lhs                3.971830618382e-2"), "{s}");
    assert!(s.contains("rhs                3.618318395257e-1"), "{s}");
}

#[test]
fn strict_flags_truncation() {
    let args = ["steer", "0.2", "0.2", "1", "--criterion", "linear", "--n", "2", "--cutoff", "6"];
    assert_eq!(steerscan(&args).status.code(), Some(1));
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(steerscan(&strict).status.code(), Some(3));
}

#[test]
fn bad_input_exits_2() {
    assert_eq!(steerscan(&["steer", "2", "1", "1"]).status.code(), Some(2));
    assert_eq!(steerscan(&["state", "0.5", "0", "1"]).status.code(), Some(2));
    assert_eq!(steerscan(&["steer", "0.5", "1", "1", "--criterion", "bogus"]).status.code(), Some(2));
    assert_eq!(
        steerscan(&["steer", "0.5", "1", "1", "--criterion", "trace-norm", "--n", "2", "--nprime", "3"]).status.code(),
        Some(2)
    );
}

fn scan_into(dir: &Path, workers: &str) -> Output {
    steerscan(&[
        "scan", "--grid", "2", "--cutoff", "6", "--criteria", "gaussian,linear:2:2", "--workers", workers,
        "--out", dir.to_str().unwrap(),
    ])
}

#[test]
fn scan_writes_grid_and_is_worker_independent() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(scan_into(&a, "1").status.code(), Some(0));
    assert_eq!(scan_into(&b, "8").status.code(), Some(0));
    let grid = fs::read_to_string(a.join("grid.csv")).unwrap();
    // 2x2 cells, two criteria each, plus header.
    assert_eq!(grid.lines().count(), 1 + 4 * 2);
    for name in ["grid.csv", "contours.csv", "manifest.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn gaussian_scan_has_one_row_per_cell() {
    let tmp = tempfile::tempdir().unwrap();
    let o = steerscan(&["scan", "--grid", "2", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let grid = fs::read_to_string(tmp.path().join("grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 5);
}

#[test]
fn config_file_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("scan.conf");
    fs::write(&cfg, "# small scan\ngrid = 3\nalpha = 0.5\nworkers = 2\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_steerscan"))
        .args(["scan", "--config", cfg.to_str().unwrap(), "--alpha", "0"])
        .env("STEERSCAN_WORKERS", "5")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("alpha         = 0  (flag)"), "{s}");
    assert!(s.contains("grid          = 3  (file)"), "{s}");
    assert!(s.contains("workers       = 2  (file)"), "{s}");

    fs::write(&cfg, "grid = 3\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_steerscan"))
        .args(["scan", "--config", cfg.to_str().unwrap()])
        .env("STEERSCAN_WORKERS", "5")
        .output()
        .unwrap();
    assert!(stdout(&o).contains("workers       = 5  (env)"));

    fs::write(&cfg, "mystery = 1\n").unwrap();
    assert_eq!(steerscan(&["scan", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn minimal_set_writes_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let o = steerscan(&[
        "minimal-set", "--grid", "2", "--cutoff", "6", "--nprime", "2", "--nmax", "3", "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(tmp.path().join("minimal_set.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(tmp.path().join("manifest.json").exists());
}
