use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const STEADY: &str = "\
[grid]
nx = 17
ny = 17

[species.1]
z = 1
d = 1
c0 = const:0.8
gamma = const:0.8

[species.2]
z = -1
d = 1
c0 = const:0.8
gamma = const:0.8

[time]
t_final = 0.3

[output]
cadence = 0.1
";

fn npe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_npe"))
        .args(args)
        .env("NPE_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn run_config(dir: &Path, text: &str, out: &str) -> Output {
    let cfg = dir.join("case.cfg");
    fs::write(&cfg, text).unwrap();
    npe(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.join(out).to_str().unwrap()])
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
}

#[test]
fn steady_run_has_flat_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(dir.path(), STEADY, "res");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let res = dir.path().join("res");
    for f in ["config.cfg", "manifest.txt", "diagnostics.csv", "snapshot_0003.vtk"] {
        assert!(res.join(f).exists(), "{f}");
    }
    assert!(!res.join("FAILURE").exists());
    let csv = fs::read_to_string(res.join("diagnostics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(column(&csv, "energy").iter().all(|&e| e < 1e-20));
    let l2 = column(&csv, "c_l2_1");
    assert!(l2.iter().all(|v| (v - l2[0]).abs() < 1e-12));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let text = STEADY
        .replace("c0 = const:0.8\ngamma", "c0 = const:0.8 bump:1.0:0.5:0.5:0.3\ngamma")
        .replace("[time]", "[physics]\nomega0 = sines:1.0:1:2\n\n[time]");
    for out in ["a", "b"] {
        assert_eq!(run_config(dir.path(), &text, out).status.code(), Some(0));
    }
    let read = |d: &str, f: &str| fs::read(dir.path().join(d).join(f)).unwrap();
    assert_eq!(read("a", "diagnostics.csv"), read("b", "diagnostics.csv"));
    assert_eq!(read("a", "snapshot_0003.vtk"), read("b", "snapshot_0003.vtk"));
    let canonical = fs::read_to_string(dir.path().join("a/config.cfg")).unwrap();
    let again = run_config(dir.path(), &canonical, "c");
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(read("c", "config.cfg"), canonical.as_bytes());
    assert_eq!(read("c", "diagnostics.csv"), read("a", "diagnostics.csv"));
}

#[test]
fn malformed_config_leaves_only_an_error_log() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(dir.path(), &STEADY.replace("nx = 17", "nx = 17\nspeed = 3"), "res");
    assert_eq!(out.status.code(), Some(1));
    let files: Vec<String> = fs::read_dir(dir.path().join("res"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(files, vec!["error.log".to_string()]);
    let log = fs::read_to_string(dir.path().join("res/error.log")).unwrap();
    assert!(log.contains("speed") && log.contains("line 3"), "{log}");
}

#[test]
fn violated_constraint_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(dir.path(), &STEADY.replacen("d = 1", "d = 0", 1), "res");
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("D > 0"));
}

#[test]
fn diag_recomputes_stored_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_config(dir.path(), STEADY, "res").status.code(), Some(0));
    let res = dir.path().join("res");
    let out = npe(&["diag", "--out", res.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("records=4"));
    let a = fs::read_to_string(res.join("diagnostics.csv")).unwrap();
    let b = fs::read_to_string(res.join("diagnostics_recomputed.csv")).unwrap();
    assert_eq!(column(&a, "c_lp_2"), column(&b, "c_lp_2"));
    let missing = npe(&["diag", "--out", dir.path().join("nothing").to_str().unwrap()]);
    assert_ne!(missing.status.code(), Some(0));
}

#[test]
fn kernel_check_prints_finite_max_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let out = npe(&["kernel-check", "--samples", "1000", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let ratio: f64 = stdout
        .split_whitespace()
        .find_map(|w| w.strip_prefix("max_ratio="))
        .expect("summary line")
        .parse()
        .unwrap();
    assert!(ratio.is_finite() && ratio > 0.0);
    let csv = fs::read_to_string(dir.path().join("kernel_check.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1001);
}

#[test]
fn mms_writes_order_report() {
    let out = npe(&["mms", "--case", "static", "--grids", "9,17,33", "--dts", "0.05,0.025,0.0125"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("study,grid,dt,error_c,error_omega,error_u"));
    assert!(stdout.contains("spatial_order_c=saturated"));
    let bad = npe(&["mms", "--grids", "9,17"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn unknown_subcommand_is_an_input_error() {
    assert_eq!(npe(&["simulate"]).status.code(), Some(1));
    assert_eq!(npe(&["--help"]).status.code(), Some(0));
}
