use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn tcb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tcb")).args(args).output().expect("spawn tcb")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Header and rows of a CSV written by the tool.
fn parse_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = read(path);
    assert!(!text.contains('\r'), "CRLF in {}", path.display());
    assert!(text.ends_with('\n'));
    let mut lines = text.lines().map(|l| l.split(',').map(str::to_string).collect::<Vec<_>>());
    let header = lines.next().expect("header");
    let rows: Vec<Vec<String>> = lines.collect();
    for r in &rows {
        assert_eq!(r.len(), header.len(), "ragged row in {}", path.display());
    }
    (header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn manifest(dir: &TempDir, text: &str) -> String {
    let p = dir.path().join("exp.toml");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn complexity_matches_reference_row() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = tcb(&["complexity", "--instance", "nu1", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = parse_csv(&dir.path().join("complexity.csv"));
    assert_eq!(h, ["instance_id", "gamma", "w_1", "w_2", "w_3", "w_4", "w_5", "residual"]);
    assert_eq!(rows[0][0], "nu1");
    for (cell, want) in rows[0][2..7].iter().zip([0.3359, 0.2515, 0.1766, 0.1324, 0.1036]) {
        let got: f64 = cell.parse().unwrap();
        assert!((got - want).abs() < 2e-3, "{got} vs {want}");
    }
}

#[test]
fn complexity_two_arm_gaussian_even() {
    let dir = TempDir::new().unwrap();
    let cfg = manifest(
        &dir,
        "[[instance]]\nid = \"pair\"\nfamily = \"gaussian\"\nmeans = [1.0, 0.0]\n",
    );
    let out = dir.path().to_str().unwrap();
    assert!(tcb(&["complexity", "--config", &cfg, "--out", out]).status.success());
    let (_, rows) = parse_csv(&dir.path().join("complexity.csv"));
    for cell in &rows[0][2..4] {
        assert!((cell.parse::<f64>().unwrap() - 0.5).abs() < 1e-9);
    }
}

#[test]
fn tied_top_arm_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = manifest(&dir, "[[instance]]\nmeans = [0.5, 0.5, 0.2]\n");
    let o = tcb(&["complexity", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("ambiguous best arm"));
}

#[test]
fn unknown_manifest_key_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = manifest(&dir, "trails = 5\n[[instance]]\npreset = \"nu1\"\n");
    assert!(!tcb(&["complexity", "--config", &cfg]).status.success());
}

#[test]
fn simulate_smoke_and_rerun() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = [
        "simulate", "--instance", "nu5", "--algorithm", "TCB", "--delta", "0.1", "--trials", "10", "--seed", "4",
        "--out", out,
    ];
    let o = tcb(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let path = dir.path().join("simulate_nu5.csv");
    let (h, rows) = parse_csv(&path);
    assert_eq!(h, ["algorithm", "beta", "delta", "trial", "seed", "tau", "decision", "correct", "error"]);
    assert_eq!(rows.len(), 10);
    let wrong = rows.iter().filter(|r| r[col(&h, "correct")] != "1").count();
    assert!(wrong <= 1);
    for r in &rows {
        assert_eq!(r[col(&h, "beta")], "NA");
        assert!(r[col(&h, "tau")].parse::<u64>().unwrap() >= 5);
    }
    let (sh, srows) = parse_csv(&dir.path().join("simulate_nu5_summary.csv"));
    assert_eq!(sh, ["algorithm", "beta", "delta", "mean_tau", "stderr", "error_rate"]);
    assert!(srows[0][col(&sh, "error_rate")].parse::<f64>().unwrap() <= 0.1);

    let first = read(&path);
    let first_summary = read(&dir.path().join("simulate_nu5_summary.csv"));
    assert!(tcb(&args).status.success());
    assert_eq!(read(&path), first);
    assert_eq!(read(&dir.path().join("simulate_nu5_summary.csv")), first_summary);
}

#[test]
fn simulate_rejects_unknown_algorithm() {
    let o = tcb(&["simulate", "--instance", "nu5", "--algorithm", "track-and-stop", "--trials", "1"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown algorithm"));
}

#[test]
fn simulate_top_two_needs_beta() {
    let o = tcb(&["simulate", "--instance", "nu5", "--algorithm", "T3C", "--trials", "1"]);
    assert!(!o.status.success());
}

#[test]
fn trace_shares_grid() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = tcb(&[
        "trace", "--instance", "nu4", "--algorithm", "TCB", "--algorithm", "ITCB", "--horizon", "2000", "--trials",
        "2", "--out", out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = parse_csv(&dir.path().join("trace_nu4.csv"));
    assert_eq!(h, ["algorithm", "t", "max_deviation", "mle_error"]);
    let grid = |name: &str| -> Vec<String> {
        rows.iter().filter(|r| r[0] == name).map(|r| r[1].clone()).collect()
    };
    assert_eq!(grid("TCB"), grid("ITCB"));
    assert_eq!(grid("TCB").last().unwrap(), "2000");
    for r in &rows {
        let d: f64 = r[2].parse().unwrap();
        assert!((0.0..=1.0).contains(&d));
    }
}

#[test]
fn trace_rejects_checkpoints_past_horizon() {
    let dir = TempDir::new().unwrap();
    let cfg = manifest(
        &dir,
        "horizon = 100\ncheckpoints = [10, 1000]\n[[instance]]\npreset = \"nu4\"\n[[algorithm]]\nname = \"TCB\"\n",
    );
    let o = tcb(&["trace", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("exceeds horizon"));
}

#[test]
fn sweep_layout_and_single_beta() {
    let dir = TempDir::new().unwrap();
    let cfg = manifest(
        &dir,
        "seed = 2\ntrials = 8\ndelta = 0.1\nbetas = [0.5]\n\
         [[instance]]\npreset = \"nu5\"\n\
         [[algorithm]]\nname = \"TCB\"\n[[algorithm]]\nname = \"TT-SPRT\"\n",
    );
    let sweep_out = dir.path().join("sweep");
    let o = tcb(&["sweep", "--config", &cfg, "--out", sweep_out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = parse_csv(&sweep_out.join("sweep_nu5.csv"));
    assert_eq!(h, ["algorithm", "beta", "mean_tau", "stderr_tau", "error_rate"]);
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0][0].as_str(), rows[0][1].as_str()), ("TCB", "NA"));
    assert_eq!((rows[1][0].as_str(), rows[1][1].as_str()), ("TT-SPRT", "0.5"));

    // The same cell through `simulate` carries identical aggregates.
    let sim_out = dir.path().join("sim");
    let o = tcb(&[
        "simulate", "--config", &cfg, "--algorithm", "TT-SPRT", "--beta", "0.5", "--out",
        sim_out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, srows) = parse_csv(&sim_out.join("simulate_nu5_summary.csv"));
    assert_eq!(&srows[0][3..6], &rows[1][2..5]);
}

#[test]
fn sweep_rejects_empty_grid() {
    let dir = TempDir::new().unwrap();
    let cfg = manifest(
        &dir,
        "betas = []\n[[instance]]\npreset = \"nu5\"\n[[algorithm]]\nname = \"T3C\"\n",
    );
    let o = tcb(&["sweep", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
}

#[test]
fn flags_override_manifest() {
    let dir = TempDir::new().unwrap();
    let cfg = manifest(
        &dir,
        "trials = 50\nseed = 1\n[[instance]]\npreset = \"nu5\"\n[[algorithm]]\nname = \"TCB\"\n",
    );
    let out = dir.path().to_str().unwrap();
    assert!(tcb(&["simulate", "--config", &cfg, "--trials", "3", "--seed", "11", "--out", out])
        .status
        .success());
    let (_, rows) = parse_csv(&dir.path().join("simulate_nu5.csv"));
    assert_eq!(rows.len(), 3);
}

#[test]
fn zero_parallelism_is_rejected() {
    assert!(!tcb(&["complexity", "--instance", "nu1", "--parallelism", "0"]).status.success());
}
