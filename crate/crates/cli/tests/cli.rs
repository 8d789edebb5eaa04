use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn gmlab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gmlab")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn recursion_reports_the_three_limits() {
    let dir = tempdir().unwrap();
    let o = gmlab(dir.path(), &["recursion"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("limit 1.2"), "{text}");
    assert!(text.contains("limit 1.33333333333333"), "{text}");
    let csv = std::fs::read_to_string(dir.path().join("recursion.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn out_of_range_damping_is_a_config_error() {
    let dir = tempdir().unwrap();
    let o = gmlab(dir.path(), &["solve", "--case", "case-a", "--set", "solver.damping=1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("solver.damping"), "{}", stderr(&o));
}

#[test]
fn parse_errors_point_at_line_and_column() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("bad.ini");
    std::fs::write(&cfg, "[domain]\nkind = ball\nparams 1\n").unwrap();
    let o = gmlab(dir.path(), &["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.ini:3:"), "{}", stderr(&o));
}

#[test]
fn unknown_keys_and_presets_are_rejected() {
    let dir = tempdir().unwrap();
    let o = gmlab(dir.path(), &["solve", "--case", "case-a", "--set", "solver.speed=2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown key"));
    let o = gmlab(dir.path(), &["solve", "--case", "case-z"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown preset"));
}

#[test]
fn usage_errors_exit_with_config_code() {
    let dir = tempdir().unwrap();
    let o = gmlab(dir.path(), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn barriers_preset_passes() {
    let dir = tempdir().unwrap();
    let o = gmlab(dir.path(), &["barriers", "--case", "alt-phillips-gamma43"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("barriers.csv").exists());
    assert!(dir.path().join("barriers.svg").exists());
}

#[test]
fn verify_all_lists_thirteen_checks() {
    let dir = tempdir().unwrap();
    let o = gmlab(dir.path(), &["verify-all", "--list"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 13);
}

#[test]
fn verify_all_grid_free_subset_skips_the_solve() {
    let dir = tempdir().unwrap();
    let args = ["verify-all", "--only", "recursion_fixed_points", "--only", "a2_coefficient_limits"];
    let o = gmlab(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("PASS")).count(), 2);
    assert!(dir.path().join("verify.json").exists());
    assert!(!dir.path().join("solution.gmf").exists());
    let o = gmlab(dir.path(), &["verify-all", "--only", "no_such_check"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_all_refuses_other_problems() {
    let dir = tempdir().unwrap();
    let o = gmlab(dir.path(), &["verify-all", "--case", "ellipse", "--only", "coarea"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn coarse_solve_writes_artifacts() {
    let dir = tempdir().unwrap();
    let o = gmlab(dir.path(), &["solve", "--case", "case-a", "--set", "solver.h=1/32"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["solution.gmf", "solve_report.json", "solve_trace.csv", "convergence.svg"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let gmf = std::fs::read(dir.path().join("solution.gmf")).unwrap();
    assert!(gmf.starts_with(b"GMF1"));
}

#[test]
fn analysis_reports_are_reproducible() {
    let a = tempdir().unwrap();
    let b = tempdir().unwrap();
    let args = ["analyze", "--case", "case-a", "--set", "solver.h=1/64"];
    let oa = gmlab(a.path(), &args);
    let ob = gmlab(b.path(), &args);
    assert!(matches!(oa.status.code(), Some(0 | 1)), "{}", stderr(&oa));
    assert_eq!(oa.status.code(), ob.status.code());
    for f in ["fb_report.json", "fb_report.csv", "solution.gmf", "detachment.svg"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs between runs");
    }
}

#[test]
fn analyze_reads_a_saved_field() {
    let dir = tempdir().unwrap();
    let o = gmlab(dir.path(), &["solve", "--case", "case-a", "--set", "solver.h=1/32"]);
    assert_eq!(o.status.code(), Some(0));
    let field = dir.path().join("solution.gmf");
    let second = dir.path().join("again");
    let o = gmlab(&second, &["analyze", "--case", "case-a", "--field", field.to_str().unwrap()]);
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", stderr(&o));
    assert!(second.join("fb_report.json").exists());
}
