use horo_core::suite::{self, Suite, SuiteConfig};
use horo_core::Exec;

/// With constant data on an annulus the solution rises to an interior ridge
/// where `W = 1`, and `H = −1/(uW)` is smaller there than on either boundary
/// circle. Only the maximum of `H` is controlled by the boundary, so this
/// check records a genuine failure.
const EXPECTED_FAILURES: &[&str] = &["annulus_h_between_boundary"];

#[test]
fn full_suite_passes_apart_from_the_interior_minimum_check() {
    let report = suite::run(Suite::All, &SuiteConfig::new(1e-8, 0)).unwrap();
    assert!(report.checks.len() >= 20);
    for c in &report.checks {
        let expected = !EXPECTED_FAILURES.contains(&c.name.as_str());
        assert_eq!(c.pass, expected, "{} value {} threshold {}", c.name, c.value, c.threshold);
    }
    assert!(!report.pass);
    let minimum = report.checks.iter().find(|c| c.name == "annulus_h_between_boundary").unwrap();
    assert!(minimum.value < 0.0);
}

#[test]
fn groups_partition_the_full_suite() {
    let all = suite::check_names(Suite::All);
    let parts: Vec<&str> = [Suite::Geometry, Suite::Profiles, Suite::Operator, Suite::Dirichlet]
        .into_iter()
        .flat_map(suite::check_names)
        .collect();
    assert_eq!(all, parts);
}

#[test]
fn reports_are_deterministic_and_policy_independent() {
    let cfg = SuiteConfig { tol: 1e-8, seed: 3, exec: Exec::Parallel };
    let a = suite::run(Suite::Geometry, &cfg).unwrap().to_json_text();
    let b = suite::run(Suite::Geometry, &SuiteConfig { exec: Exec::Sequential, ..cfg }).unwrap().to_json_text();
    assert_eq!(a, b);
    let keys: Vec<&str> = a.lines().filter_map(|l| l.trim().split('"').nth(1)).take(6).collect();
    assert_eq!(keys, ["checks", "name", "anchor", "value", "threshold", "pass"]);
}

#[test]
fn nonpositive_tolerance_is_rejected() {
    assert!(suite::run(Suite::Geometry, &SuiteConfig::new(0.0, 0)).unwrap_err().is_validation());
}
