use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_monoshade"));
    c.env_remove("OUT_DIR").env_remove("RUST_LOG");
    c
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out-dir").arg(out).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("terminated by signal")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const MINIMAL: &str = r#"{
  "name": "mini",
  "set": {"kind": "plane", "flat": {"origin": [0, 0, 0], "basis": [[1, 0, 0], [0, 1, 0]]}},
  "boundary": {"flats": [{"origin": [0.5, 0, 0.5], "basis": [[0, 1, 0]]}]},
  "center": [0, 0, 0],
  "radii": {"min": 0.1, "max": 0.5, "count": 5},
  "actions": [{"action": "check_monotone"}]
}"#;

#[test]
fn halfplane_scenario_passes_and_writes_artifacts() {
    let out = TempDir::new().unwrap();
    let path = scenarios().join("halfplane_exact.json");
    let o = run(&["run", path.to_str().unwrap()], out.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.path().join("halfplane_exact.profile.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("r,theta,shade_term,F,F_scaled,abs_error"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|t| t.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 32);
    for row in &rows {
        assert_eq!(row.len(), 6);
        assert!((row[3] - std::f64::consts::PI).abs() < 1e-6, "{row:?}");
        assert_eq!(row[3], row[1] + row[2]);
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("halfplane_exact.verdicts.json")).unwrap()).unwrap();
    assert_eq!(report["scenario"], "halfplane_exact");
    assert_eq!(report["status"], "pass");
    let verdicts = report["verdicts"].as_array().unwrap();
    assert_eq!(verdicts.len(), 3);
    for v in verdicts {
        assert_eq!(v["got"], v["expected"]);
        assert!(v["margin"].as_f64().unwrap() >= 0.0);
    }
}

#[test]
fn bundled_suite_passes() {
    let out = TempDir::new().unwrap();
    let o = run(&["suite"], out.path());
    let table = String::from_utf8(o.stdout.clone()).unwrap();
    assert_eq!(code(&o), 0, "{table}\n{}", stderr(&o));
    assert!(table.starts_with("scenario"));
    assert!(table.contains("7 scenarios, status Pass"), "{table}");
    assert!(!table.contains(" *"), "{table}");
    assert!(out.path().join("competitor_collapse.out.off").is_file());
}

#[test]
fn malformed_json_exits_one_with_a_position() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"name\": \"x\",\n  \"set\": \n").unwrap();
    let o = run(&["run", path.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.contains("bad.json") && err.contains("line"), "{err}");
}

#[test]
fn unknown_field_names_its_path() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("typo.json");
    std::fs::write(&path, MINIMAL.replace("\"count\": 5", "\"count\": 5, \"spacng\": \"log\"")).unwrap();
    let o = run(&["run", path.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.contains("radii") && err.contains("spacng"), "{err}");
}

#[test]
fn empty_scenario_dir_is_an_error() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("notes.txt"), "not a scenario").unwrap();
    let o = run(&["suite", "--dir", dir.path().to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("no scenario files"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    assert_eq!(code(&bin().arg("frobnicate").output().unwrap()), 1);
    assert_eq!(code(&bin().args(["run", "x.json", "--radii", "1,0.5,3"]).output().unwrap()), 1);
    assert_eq!(code(&bin().arg("--help").output().unwrap()), 0);
}

#[test]
fn tighter_tolerance_on_a_mesh_is_inconclusive() {
    let out = TempDir::new().unwrap();
    let path = scenarios().join("halfplane_relaxed.json");
    let o = run(&["run", path.to_str().unwrap()], out.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    // the scenario's own measure_tol is 2e-3
    let o = run(&["run", path.to_str().unwrap(), "--tol", "2e-5"], out.path());
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn expected_failure_that_passes_is_a_failure() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("wrong.json");
    std::fs::write(&path, MINIMAL.replace(r#"{"action": "check_monotone"}"#, r#"{"action": "check_monotone", "expect": "fail"}"#))
        .unwrap();
    let o = run(&["run", path.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 1);
    let report = std::fs::read_to_string(dir.path().join("mini.verdicts.json")).unwrap();
    assert!(report.contains("\"status\": \"fail\""), "{report}");
}

#[test]
fn reruns_are_bit_identical() {
    let path = scenarios().join("halfplane_relaxed.json");
    let read = |d: &Path| {
        ["profile.csv", "out.off"].map(|s| std::fs::read(d.join(format!("halfplane_relaxed.{s}"))).unwrap())
    };
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    assert_eq!(code(&run(&["run", path.to_str().unwrap()], a.path())), 0);
    assert_eq!(code(&run(&["run", path.to_str().unwrap()], b.path())), 0);
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn overrides_change_the_grid() {
    let path = scenarios().join("halfplane_exact.json");
    let o = bin().args(["profile", path.to_str().unwrap(), "--radii", "0.5,1.5,3,linear"]).output().unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = String::from_utf8(o.stdout).unwrap();
    let radii: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(radii, ["0.5", "1", "1.5"]);
}

#[test]
fn out_dir_falls_back_to_the_environment() {
    let out = TempDir::new().unwrap();
    let path = scenarios().join("v_cone_monotone.json");
    let o = bin().arg("run").arg(&path).env("OUT_DIR", out.path()).output().unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(out.path().join("v_cone_monotone.verdicts.json").is_file());
}

#[test]
fn measure_reports_a_unit_square() {
    let dir = TempDir::new().unwrap();
    let mesh = dir.path().join("square.off");
    std::fs::write(&mesh, "OFF\n4 2 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n3 0 1 2\n3 0 2 3\n").unwrap();
    let o = bin().args(["measure", mesh.to_str().unwrap(), "--ball", "0.5,0.5,0,5"]).output().unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((m["value"].as_f64().unwrap() - 1.0).abs() <= m["abs_error"].as_f64().unwrap() + 1e-12, "{m}");
    // a ball cutting the square leaves a curved piece
    let o = bin().args(["measure", mesh.to_str().unwrap(), "--ball", "0,0,0,0.5", "--tol", "1e-6"]).output().unwrap();
    let m: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let quarter = std::f64::consts::PI * 0.25 / 4.0;
    assert!((m["value"].as_f64().unwrap() - quarter).abs() <= m["abs_error"].as_f64().unwrap() + 1e-9, "{m}");
}
