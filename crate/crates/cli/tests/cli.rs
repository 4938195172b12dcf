use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn horo(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_horo")).current_dir(dir).args(args).output().expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn grim_writes_profile_and_metadata() {
    let dir = TempDir::new().unwrap();
    let o = horo(dir.path(), &["grim", "--n", "2", "--height", "1.0", "--samples", "512", "--out", "g.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let meta = json(&dir.path().join("g.json"));
    assert_eq!(meta["kind"], "grim_reaper");
    assert!(meta["residual_max"].as_f64().unwrap() < 1e-8);
    let csv = fs::read_to_string(dir.path().join("g.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("s,z,rho,alpha"));
    assert_eq!(lines.count(), 512);
    // 17 significant digits: one before the point, sixteen after
    let field = csv.lines().nth(2).unwrap().split(',').nth(1).unwrap();
    let mantissa = field.split('e').next().unwrap();
    assert_eq!(mantissa.split('.').nth(1).unwrap().len(), 16);
}

#[test]
fn bowl_by_radius_hits_the_requested_radius() {
    let dir = TempDir::new().unwrap();
    let o = horo(dir.path(), &["bowl", "--n", "2", "--radius", "2.0", "--out", "b.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let meta = json(&dir.path().join("b.json"));
    assert!((meta["r2"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert!(meta["h"].as_f64().unwrap() > 0.0);
    let keys: Vec<&String> = meta.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["kind", "n", "h", "R", "r2", "lambda0", "endpoints", "residual_max"]);
}

#[test]
fn profile_round_trip_through_verify() {
    let dir = TempDir::new().unwrap();
    assert_eq!(horo(dir.path(), &["bowl", "--n", "2", "--height", "1.0", "--out", "b.csv"]).status.code(), Some(0));
    let o = horo(dir.path(), &["verify", "--curve", "b.csv", "--report", "r.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = json(&dir.path().join("r.json"));
    assert_eq!(report["pass"], true);
    assert!(report["checks"][0]["value"].as_f64().unwrap() <= 2.0);
}

#[test]
fn wing_writes_both_branches() {
    let dir = TempDir::new().unwrap();
    let o = horo(dir.path(), &["wing", "--n", "2", "--tip-height", "1", "--tip-radius", "0.5", "--out", "w.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let upper = json(&dir.path().join("w.json"));
    let lower = json(&dir.path().join("w_lower.json"));
    assert_eq!(upper["kind"], "wing_upper");
    assert_eq!(lower["kind"], "wing_lower");
    assert!(lower["lambda0"].is_f64());
    for name in ["w.csv", "w_lower.csv"] {
        let o = horo(dir.path(), &["verify", "--curve", name, "--report", "r.json"]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
    }
}

#[test]
fn geodesic_accepts_negative_values() {
    let dir = TempDir::new().unwrap();
    let args =
        ["geodesic", "--n", "2", "--z0", "1", "--w0", "-0.5", "--angle", "-0.3", "--span", "20", "--out", "c.csv"];
    let o = horo(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let meta = json(&dir.path().join("c.json"));
    assert_eq!(meta["kind"], "geodesic");
    assert!(fs::read_to_string(dir.path().join("c.csv")).unwrap().starts_with("s,z,w,dz,dw\n"));
}

#[test]
fn dirichlet_reports_the_radial_oracle() {
    let dir = TempDir::new().unwrap();
    let problem = r#"{"domain":{"shape":"annulus","r_in":0.5,"r_out":1.0,"resolution":65},
        "bc":{"kind":"per_side","values":[1.0,0.8]},"n":2,"tol":1e-10}"#;
    fs::write(dir.path().join("p.json"), problem).unwrap();
    let o = horo(dir.path(), &["dirichlet", "--problem", "p.json", "--out", "u.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let meta = json(&dir.path().join("u.json"));
    assert!(meta["final_residual"].as_f64().unwrap() < 1e-10);
    assert!(meta["oracle"]["max_abs_error"].as_f64().unwrap() < 1e-4);
    let o = horo(dir.path(), &["dirichlet", "--problem", "p.json", "--out", "v.csv", "--oracle", "none"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(json(&dir.path().join("v.json"))["oracle"].is_null());
    assert_eq!(fs::read(dir.path().join("u.csv")).unwrap(), fs::read(dir.path().join("v.csv")).unwrap());
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    for out in ["a.csv", "b.csv"] {
        assert_eq!(horo(dir.path(), &["bowl", "--n", "3", "--height", "0.7", "--out", out]).status.code(), Some(0));
    }
    for report in ["a.json", "b.json"] {
        let args = ["verify", "--suite", "geometry", "--seed", "5", "--report", report];
        assert_eq!(horo(dir.path(), &args).status.code(), Some(0));
    }
    let read = |name: &str| fs::read(dir.path().join(name)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_eq!(read("a.json"), read("b.json"));
}

#[test]
fn verify_suite_report_shape() {
    let dir = TempDir::new().unwrap();
    let o = horo(dir.path(), &["verify", "--suite", "profiles", "--tol", "1e-8", "--report", "r.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = json(&dir.path().join("r.json"));
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.len() >= 10);
    for c in checks {
        let keys: Vec<&String> = c.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["name", "anchor", "value", "threshold", "pass"]);
    }
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let cases: &[&[&str]] = &[
        &["grim", "--n", "2", "--height", "-1", "--out", "x.csv"],
        &["grim", "--n", "2", "--height", "abc", "--out", "x.csv"],
        &["grim", "--n", "2", "--height", "1"],
        &["bowl", "--n", "2", "--out", "x.csv"],
        &["bowl", "--n", "2", "--height", "1", "--radius", "2", "--out", "x.csv"],
        &["bowl", "--n", "2", "--height", "1", "--zfloor", "0.5", "--out", "x.csv"],
        &["geodesic", "--n", "2", "--z0", "0", "--w0", "0", "--angle", "0", "--out", "x.csv"],
        &["dirichlet", "--problem", "missing.json", "--out", "x.csv"],
        &["verify", "--suite", "nonsense", "--report", "r.json"],
        &["verify", "--suite", "geometry", "--tol", "0", "--report", "r.json"],
        &["verify", "--report", "r.json"],
        &["frobnicate"],
        &[],
    ];
    for args in cases {
        let o = horo(dir.path(), args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn malformed_problem_files_are_validation_errors() {
    let dir = TempDir::new().unwrap();
    for (i, text) in [
        "{",
        r#"{"domain":{"shape":"ball","radius":1.0,"resolution":3},"bc":{"kind":"constant","c":1.0},"n":2,"tol":1e-9}"#,
        r#"{"domain":{"shape":"ball","radius":1.0,"resolution":17},"bc":{"kind":"constant","c":-1.0},"n":2,"tol":1e-9}"#,
        r#"{"domain":{"shape":"ball","radius":1.0,"resolution":17},"bc":{"kind":"constant","c":1.0},"n":2,"tol":-1}"#,
    ]
    .iter()
    .enumerate()
    {
        let name = format!("p{i}.json");
        fs::write(dir.path().join(&name), text).unwrap();
        let o = horo(dir.path(), &["dirichlet", "--problem", &name, "--out", "x.csv"]);
        assert_eq!(o.status.code(), Some(2), "{text}: {}", stderr(&o));
    }
}

#[test]
fn numerical_failures_exit_with_three_and_name_the_error() {
    let dir = TempDir::new().unwrap();
    let o = horo(dir.path(), &["wing", "--n", "2", "--tip-height", "1", "--tip-radius", "1e-9", "--out", "w.csv"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("StepFailure"));
}

#[test]
fn failing_checks_exit_with_one() {
    let dir = TempDir::new().unwrap();
    assert_eq!(horo(dir.path(), &["bowl", "--n", "2", "--height", "1.0", "--out", "b.csv"]).status.code(), Some(0));
    let meta_path = dir.path().join("b.json");
    let mut meta = json(&meta_path);
    meta["residual_max"] = Value::from(1e-3);
    fs::write(&meta_path, serde_json::to_string(&meta).unwrap()).unwrap();
    let o = horo(dir.path(), &["verify", "--curve", "b.csv", "--report", "r.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&dir.path().join("r.json"))["pass"], false);
}
