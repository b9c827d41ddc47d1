use lieq_core::config::RunConfig;
use lieq_core::verify::{run_suite, CHECK_NAMES};
use lieq_core::ModelKind;

#[test]
fn full_default_suite_on_binterval_passes() {
    let mut cfg = RunConfig::default();
    cfg.geometry.kind = ModelKind::BInterval;
    cfg.geometry.n = 128;
    let reports = run_suite(&cfg).unwrap();
    assert_eq!(reports.len(), CHECK_NAMES.len());
    for r in &reports {
        assert!(r.pass, "{}: measured {} tol {} ({})", r.name, r.measured, r.tolerance, r.detail);
        assert!(r.measured.is_finite());
    }
}

#[test]
fn failing_precondition_fails_only_its_check() {
    // a cutoff wider than the circle's injectivity radius is rejected
    let cfg = RunConfig::from_toml_str("[geometry]\nn = 64\n[cutoff]\nr = 5.0\n[suite]\nchecks = [\"identity\", \"conjugation\"]").unwrap();
    let reports = run_suite(&cfg).unwrap();
    assert_eq!(reports.len(), 2);
    assert!(!reports[0].pass);
    assert!(reports[0].detail.starts_with("error:"), "{}", reports[0].detail);
    assert!(reports[0].measured.is_nan());
}
