use std::path::Path;
use std::process::{Command, Output};

use nls_reduce::catalog::{make_family, FamilyInfo};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nls-reduce")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn catalog_json_builds_every_family() {
    let o = run(&["catalog", "--json"]);
    assert_eq!(code(&o), 0);
    let infos: Vec<FamilyInfo> = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(infos.len(), 7);
    for info in infos {
        let spec = info.default.build().unwrap();
        let family = spec.family();
        assert_eq!(make_family(family, spec.dim(), spec.params()).unwrap().descriptor(), info.default);
    }
}

#[test]
fn catalog_single_family() {
    let o = run(&["catalog", "--family", "II.2"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("II.2") && !text.contains("II.3"), "{text}");
    assert_eq!(code(&run(&["catalog", "--family", "III.1"])), 2);
}

#[test]
fn verify_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", "--family", "II.3", "--out", path(dir.path())]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let json = std::fs::read(dir.path().join("verify_II_3.json")).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&json).unwrap();
    assert_eq!(v["passed"], serde_json::Value::Bool(true));
    assert!(dir.path().join("verify_II_3.txt").exists());
}

#[test]
fn negative_control_exits_one() {
    let o = run(&["verify", "--family", "II.1", "--perturb", "phase:0.1"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"schema": 1, "command": "verify", "colour": "red"}"#).unwrap();
    assert_eq!(code(&run(&["verify", "--config", path(&bad)])), 2);
    std::fs::write(&bad, r#"{"schema": 9, "command": "verify"}"#).unwrap();
    assert_eq!(code(&run(&["verify", "--config", path(&bad)])), 2);
    assert_eq!(code(&run(&["verify", "--family", "II.1", "--params", "zeta=1"])), 2);
    assert_eq!(code(&run(&["verify", "--family", "I.1", "--n", "2"])), 2);
    assert_eq!(code(&run(&["verify", "--grid", "0,1,0.5"])), 2);
    // |x| reaches 2.6 on the default grid
    assert_eq!(code(&run(&["solve", "--kind", "case-ii", "--family", "II.3", "--range", "0.5,2"])), 2);
}

#[test]
fn blow_up_exits_three() {
    // φ'' = φ³ from φ = 5 blows up well inside the range
    let o = run(&[
        "solve", "--kind", "case-ii", "--family", "II.1", "--params", "a=0,b=0", "--nonlinearity",
        "power:g=1,p=2", "--phi0", "5,0", "--dphi0", "5,0", "--range", "0.1,3", "--step", "1e-3",
    ]);
    assert_eq!(code(&o), 3);
}

#[test]
fn solve_plane_wave_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["solve", "--kind", "plane-wave", "--out", path(dir.path()), "--json"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let csv = std::fs::read_to_string(dir.path().join("u.csv")).unwrap();
    assert!(csv.lines().next().unwrap().starts_with("t,x1"));
    // |u| = c = 1 everywhere
    for line in csv.lines().skip(1).take(50) {
        let modulus: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((modulus - 1.0).abs() < 1e-14);
    }
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    assert!(summary["max_residual"].as_f64().unwrap() <= 1e-5, "{summary}");
}

#[test]
fn wave_commands() {
    assert_eq!(code(&run(&["wave", "--family", "linear"])), 0);
    assert_eq!(code(&run(&["wave", "--family", "quadratic", "--params", "B1=1,B2=2", "--k", "3"])), 0);
    assert_eq!(code(&run(&["wave", "--family", "cubic-control"])), 1);
    assert_eq!(code(&run(&["wave", "--family", "linear", "--k", "1"])), 2);
}

#[test]
fn export_wave_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["export", "--kind", "wave", "--family", "linear", "--out", path(dir.path())]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let csv = std::fs::read_to_string(dir.path().join("u.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x0,x1,x2,x3,u"));
    assert!(csv.lines().count() > 100);
}

#[test]
fn verify_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &Path| {
        run(&["verify", "--transform", "--seed", "3", "--json", "--out", path(out)])
    };
    let (a, b) = (args(&dir.path().join("a")), args(&dir.path().join("b")));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(
        std::fs::read(dir.path().join("a/verify_II_2.json")).unwrap(),
        std::fs::read(dir.path().join("b/verify_II_2.json")).unwrap()
    );
    let c = run(&["verify", "--transform", "--seed", "4", "--json"]);
    assert_ne!(a.stdout, c.stdout);
}
