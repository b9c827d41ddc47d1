//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use lieq_core::config::RunConfig;
use lieq_core::verify::{run_suite, write_reports, CheckReport};
use lieq_core::ModelKind;

const ALL_MODELS: [ModelKind; 3] = [ModelKind::Circle, ModelKind::BInterval, ModelKind::ScLine];

fn config(kind: ModelKind, n: usize, checks: &[&str]) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.geometry.kind = kind;
    cfg.geometry.n = n;
    cfg.suite.checks = Some(checks.iter().map(|c| c.to_string()).collect());
    cfg
}

fn run(kind: ModelKind, n: usize, check: &str) -> CheckReport {
    let mut reports = run_suite(&config(kind, n, &[check])).expect("valid config");
    reports.pop().expect("one report")
}

fn describe(r: &CheckReport) -> String {
    format!("{} N={} measured={:.3e} tol={:.1e}", r.geometry, r.n, r.measured, r.tolerance)
}

/// Runs `check` on each `(model, N)`; passes iff every report passes.
fn criterion(check: &str, cases: &[(ModelKind, usize)]) -> (bool, String) {
    let reports: Vec<CheckReport> = cases.iter().map(|&(k, n)| run(k, n, check)).collect();
    let pass = reports.iter().all(|r| r.pass);
    let mut text: Vec<String> = reports.iter().map(describe).collect();
    for r in reports.iter().filter(|r| !r.pass) {
        text.push(format!("[{}: {}]", r.geometry, r.detail));
    }
    (pass, text.join("; "))
}

fn every_model(check: &str, n: usize) -> (bool, String) {
    let cases: Vec<_> = ALL_MODELS.iter().map(|&k| (k, n)).collect();
    criterion(check, &cases)
}

fn determinism() -> (bool, String) {
    let root = tempfile::tempdir().expect("temp dir");
    let mut cfg = RunConfig::default();
    cfg.geometry.kind = ModelKind::BInterval;
    let mut files = Vec::new();
    for pass in ["a", "b"] {
        let dir = root.path().join(pass);
        let mut reports = run_suite(&cfg).expect("suite");
        write_reports(&dir, &mut reports).expect("write");
        let mut names: Vec<_> = std::fs::read_dir(&dir)
            .expect("read dir")
            .map(|e| e.expect("entry").file_name())
            .collect();
        names.sort();
        let contents: Vec<_> = names.iter().map(|n| (n.clone(), std::fs::read(dir.join(n)).expect("read"))).collect();
        files.push(contents);
    }
    let identical = files[0] == files[1];
    (
        identical && !files[0].is_empty(),
        format!("{} report files, full suite on b_interval, seed {}; bit-identical: {identical}", files[0].len(), cfg.seed),
    )
}

fn main() -> ExitCode {
    type Criterion = Box<dyn Fn() -> (bool, String)>;
    let criteria: Vec<(&str, Criterion)> = vec![
        ("identity quantization", Box::new(|| criterion("identity", &[(ModelKind::Circle, 128)]))),
        ("vector-field quantization", Box::new(|| every_model("vector_field", 256))),
        ("Euclidean oracle agreement", Box::new(|| criterion("weylq_oracle", &[(ModelKind::ScLine, 128)]))),
        ("cutoff independence", Box::new(|| every_model("cutoff_independence", 128))),
        ("composition symbol law", Box::new(|| every_model("composition", 512))),
        ("commutator and Poisson bracket", Box::new(|| every_model("commutator_poisson", 512))),
        ("conjugation stability", Box::new(|| criterion("conjugation", &[(ModelKind::BInterval, 512)]))),
        ("Sobolev ladder", Box::new(|| every_model("sobolev", 128))),
        ("Diff recovery", Box::new(|| every_model("diff_recovery", 128))),
        ("suspended invariance", Box::new(|| every_model("suspended", 128))),
        ("semiclassical scaling", Box::new(|| every_model("semiclassical", 128))),
        ("determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = run();
        if !pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {detail} ({:.1}s)",
            if pass { "PASS" } else { "FAIL" },
            k + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
