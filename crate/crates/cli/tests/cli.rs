use std::f64::consts::PI;
use std::path::Path;

use assert_cmd::Command;
use lieq_core::quantize::read_snapshot;

fn lieq() -> Command {
    Command::cargo_bin("lieq").expect("binary built")
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn read_kernel_csv(path: &Path) -> Vec<Vec<(f64, f64)>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|line| {
            let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
            v.chunks(2).map(|c| (c[0], c[1])).collect()
        })
        .collect()
}

fn read_output(path: &Path) -> (String, Vec<(f64, f64)>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    (header, rows)
}

#[test]
fn check_passes_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", "[geometry]\nkind = \"circle\"\nn = 64\n[suite]\nchecks = [\"identity\", \"sobolev\"]\n");
    let out = dir.path().join("out");
    lieq().arg("--config").arg(&cfg).arg("--out").arg(&out).arg("check").assert().success();
    let csv = std::fs::read_to_string(out.join("report.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("name,geometry,N,L,measured,tol,pass"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "identity");
    assert_eq!(rows[0][1], "circle");
    assert_eq!(rows[0][6], "true");
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["all_pass"], true);
    let sobolev = &summary["checks"][1];
    let artifacts: Vec<&str> = sobolev["artifacts"].as_array().unwrap().iter().map(|a| a.as_str().unwrap()).collect();
    assert_eq!(artifacts, ["sobolev.svg", "sobolev.csv"]);
    let svg = std::fs::read_to_string(out.join("sobolev.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    let data = std::fs::read_to_string(out.join("sobolev.csv")).unwrap();
    assert_eq!(data.lines().next(), Some("series,x,y"));
}

#[test]
fn unachievable_tolerance_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", "[geometry]\nn = 64\n[suite]\nchecks = [\"identity\"]\n[tolerances]\nidentity = 0.0\n");
    lieq().args(["--quiet", "--out"]).arg(dir.path()).arg("--config").arg(&cfg).arg("check").assert().code(1);
}

#[test]
fn malformed_config_and_bad_usage_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "[geometry\nn = ");
    lieq().arg("--config").arg(&bad).arg("check").assert().code(2);
    let unknown = write(dir.path(), "unknown.toml", "colour = \"red\"\n");
    lieq().arg("--config").arg(&unknown).arg("check").assert().code(2);
    let missing = dir.path().join("nope.toml");
    lieq().arg("--config").arg(&missing).arg("check").assert().code(2);
    lieq().arg("frobnicate").assert().code(2);
    lieq().args(["check", "--bogus"]).assert().code(2);
}

#[test]
fn json_config_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", r#"{"geometry": {"n": 64}, "suite": {"checks": ["identity"]}}"#);
    lieq().arg("--config").arg(&cfg).arg("--out").arg(dir.path()).arg("check").assert().success();
}

#[test]
fn kernel_of_one_is_inverse_weights() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", "[geometry]\nn = 32\n");
    let out = dir.path().join("k.csv");
    let assert = lieq().arg("--config").arg(&cfg).args(["kernel", "--symbol", "one", "--out"]).arg(&out).assert().success();
    let stdout = String::from_utf8(assert.get_output().stdout.clone()).unwrap();
    assert!(stdout.contains("symbol=one"), "{stdout}");
    let k = read_kernel_csv(&out);
    let w = 2.0 * PI / 32.0;
    assert_eq!(k.len(), 32);
    for (i, row) in k.iter().enumerate() {
        assert_eq!(row.len(), 32);
        for (j, &(re, im)) in row.iter().enumerate() {
            let want = if i == j { 1.0 / w } else { 0.0 };
            assert!((re - want).abs() < 1e-9 && im.abs() < 1e-9);
        }
    }
    let snap = read_snapshot(std::fs::File::open(out.with_extension("liek")).unwrap()).unwrap();
    assert_eq!(snap.kernel.nrows(), 32);
    assert_eq!(snap.order, 0.0);
    assert!((snap.kernel[(3, 3)].re - 1.0 / w).abs() < 1e-9);
}

#[test]
fn kernel_of_xi_is_imaginary_antisymmetric() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", "[geometry]\nn = 32\n");
    let out = dir.path().join("xi.csv");
    lieq().arg("--quiet").arg("--config").arg(&cfg).args(["kernel", "--symbol", "xi", "--out"]).arg(&out).assert().success();
    let k = read_kernel_csv(&out);
    let scale = k.iter().flatten().map(|&(a, b)| a.hypot(b)).fold(0.0, f64::max);
    for i in 0..32 {
        for j in 0..32 {
            assert!(k[i][j].0.abs() <= 1e-12 * scale);
            assert!((k[i][j].1 + k[j][i].1).abs() <= 1e-12 * scale);
        }
    }
}

#[test]
fn kernel_without_out_uses_default_path() {
    let dir = tempfile::tempdir().unwrap();
    lieq().arg("--out").arg(dir.path()).args(["--quiet", "kernel", "--symbol", "jbracket_pow:2"]).assert().success();
    assert!(dir.path().join("kernel_jbracket_pow_2.csv").exists());
    assert!(dir.path().join("kernel_jbracket_pow_2.liek").exists());
}

#[test]
fn kernel_with_unknown_symbol_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    lieq().arg("--out").arg(dir.path()).args(["kernel", "--symbol", "nonsense"]).assert().code(2);
}

fn circle_samples(n: usize, f: impl Fn(f64) -> f64) -> String {
    let h = 2.0 * PI / n as f64;
    let mut text = String::from("re\n");
    for j in 0..n {
        text.push_str(&format!("{}\n", f(j as f64 * h)));
    }
    text
}

#[test]
fn apply_one_is_identity_and_xi_differentiates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", "[geometry]\nn = 64\n");
    let input = write(dir.path(), "u.csv", &circle_samples(64, f64::sin));
    let out = dir.path().join("one.csv");
    lieq().arg("--quiet").arg("--config").arg(&cfg).args(["apply", "--symbol", "one", "--input"]).arg(&input).arg("--out").arg(&out).assert().success();
    let (header, rows) = read_output(&out);
    assert_eq!(header, "re,im");
    let h = 2.0 * PI / 64.0;
    for (j, &(re, im)) in rows.iter().enumerate() {
        assert!((re - (j as f64 * h).sin()).abs() < 1e-12 && im.abs() < 1e-12);
    }
    let out = dir.path().join("xi.csv");
    lieq().arg("--quiet").arg("--config").arg(&cfg).args(["apply", "--symbol", "xi", "--input"]).arg(&input).arg("--out").arg(&out).assert().success();
    let (_, rows) = read_output(&out);
    assert_eq!(rows.len(), 64);
    for (j, &(re, im)) in rows.iter().enumerate() {
        assert!(re.abs() < 1e-12 && (im + (j as f64 * h).cos()).abs() < 1e-12);
    }
}

#[test]
fn apply_accepts_complex_rows_without_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", "[geometry]\nn = 16\n");
    let rows: Vec<(f64, f64)> = (0..16).map(|k| (k as f64, -0.5 * k as f64)).collect();
    let text: String = rows.iter().map(|(a, b)| format!("{a},{b}\n")).collect();
    let input = write(dir.path(), "u.csv", &text);
    let out = dir.path().join("pu.csv");
    lieq().arg("--quiet").arg("--config").arg(&cfg).args(["apply", "--symbol", "one", "--input"]).arg(&input).arg("--out").arg(&out).assert().success();
    let (_, got) = read_output(&out);
    assert_eq!(got.len(), 16);
    for (g, w) in got.iter().zip(&rows) {
        assert!((g.0 - w.0).abs() < 1e-12 && (g.1 - w.1).abs() < 1e-12);
    }
}

#[test]
fn apply_rejects_empty_and_mismatched_input() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", "[geometry]\nn = 64\n");
    let empty = write(dir.path(), "empty.csv", "re,im\n");
    lieq().arg("--config").arg(&cfg).args(["apply", "--symbol", "one", "--input"]).arg(&empty).assert().code(2);
    let short = write(dir.path(), "short.csv", &circle_samples(32, f64::sin));
    lieq().arg("--config").arg(&cfg).args(["apply", "--symbol", "one", "--input"]).arg(&short).assert().code(2);
}

#[test]
fn seed_flag_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", "[geometry]\nn = 64\n[suite]\nchecks = [\"identity\"]\n");
    lieq().arg("--config").arg(&cfg).arg("--out").arg(dir.path()).args(["--seed", "99", "--quiet", "check"]).assert().success();
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 99);
}
