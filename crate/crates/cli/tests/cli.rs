use std::path::Path;
use std::process::{Command, Output};

fn eqrf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eqrf"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|v| v.strip_prefix(' ')))
        .unwrap_or_else(|| panic!("no `{key}` in {text}"))
        .to_string()
}

fn phi_re(lambda: &str, re: &str) -> f64 {
    let o = eqrf(&["phi", "--lambda", lambda, "--re", re]);
    assert!(o.status.success(), "{o:?}");
    field(&stdout(&o), "re").parse().unwrap()
}

#[test]
fn phi_known_values() {
    assert!((phi_re("1", "1") - 1.718281828459045).abs() < 1e-15);
    assert!((phi_re("0.5", "0") - std::f64::consts::FRAC_2_SQRT_PI).abs() < 1e-15);
    // Independent high-precision quadrature and series both give this value.
    let v = phi_re("1.75", "-50");
    assert!((v / 0.021433210599832553 - 1.0).abs() < 1e-14, "{v}");
}

#[test]
fn phi_reports_method_and_estimate() {
    let o = eqrf(&["phi", "--lambda", "0.75", "--re", "-3", "--im", "400"]);
    let text = stdout(&o);
    assert!(!field(&text, "method").is_empty());
    let est: f64 = field(&text, "est_rel_error").parse().unwrap();
    assert!(est > 0.0 && est < 1e-10);
    let _: f64 = field(&text, "im").parse().unwrap();
}

#[test]
fn phi_json_output() {
    let o = eqrf(&["phi", "--lambda", "1", "--re", "1", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["re"].as_f64().unwrap() - 1.718281828459045).abs() < 1e-15);
    assert_eq!(v["im"].as_f64().unwrap(), 0.0);
    assert!(v["method"].is_string());
}

#[test]
fn phi_rejects_bad_input() {
    let o = eqrf(&["phi", "--lambda", "-1", "--re", "0"]);
    assert!(!o.status.success());
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
    let o = eqrf(&["phi", "--lambda", "one", "--re", "0"]);
    assert!(!o.status.success());
}

const CONFIG: &str = r#"[
  {
    "name": "scalar_quick",
    "problem": "scalar_intro",
    "overrides": { "r": 0.75 },
    "methods": [
      { "label": "EQRF1 c1=0", "scheme": "eqrf1", "c1": 0.0 },
      { "label": "EQRF1 c1=1/2", "scheme": "eqrf1", "c1": 0.5 }
    ],
    "N": [4, 16, 64, 256],
    "expect": { "orders": [{ "method": "EQRF1 c1=0", "order": 1.0, "tol": 0.1 }] }
  },
  { "name": "single", "problem": "scalar_intro", "methods": [{ "scheme": "eqrf1", "c1": 0.5 }], "N": [8] }
]"#;

fn run_study_cli(dir: &Path) -> (Output, String, String) {
    let config = dir.join("study.json");
    std::fs::write(&config, CONFIG).unwrap();
    let out = dir.join("out");
    let o = eqrf(&[
        "study",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let csv = std::fs::read_to_string(out.join("scalar_quick.csv")).unwrap();
    let json = std::fs::read_to_string(out.join("scalar_quick.json")).unwrap();
    (o, csv, json)
}

#[test]
fn study_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let (o, csv, json) = run_study_cli(dir.path());
    assert!(o.status.success(), "{o:?}");
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("method,formulation,nodes,N,error,seconds")
    );
    assert_eq!(lines.count(), 8);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert!(v.to_string().contains("EQRF1 c1=1/2"));
    assert!(stdout(&o).contains("PASS"));
    let single = std::fs::read_to_string(dir.path().join("out/single.csv")).unwrap();
    assert_eq!(single.lines().count(), 2);
    assert!(stdout(&o).contains("no order"));
}

#[test]
fn study_errors_are_deterministic() {
    let errors = |csv: &str| -> Vec<String> {
        csv.lines()
            .skip(1)
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect()
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(
        errors(&run_study_cli(a.path()).1),
        errors(&run_study_cli(b.path()).1)
    );
}

#[test]
fn study_rejects_invalid_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    std::fs::write(
        &config,
        r#"{"name": "x", "problem": "scalar_intro", "methods": [], "N": [8, 4]}"#,
    )
    .unwrap();
    let o = eqrf(&[
        "study",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    let o = eqrf(&[
        "study",
        "--config",
        "/nonexistent/x.json",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!o.status.success());
}

#[test]
fn accept_fig1_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = eqrf(&[
        "accept",
        "--suite",
        "fig1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(
        text.lines()
            .filter(|l| l.starts_with("PASS [fig1]"))
            .count()
            >= 9
    );
    assert!(!text.contains("FAIL"));
    assert!(dir.path().join("fig1_r3_4.csv").exists());
}

#[test]
fn accept_exits_nonzero_on_failed_criteria() {
    // The fig6 suite carries criteria that a faithful implementation misses.
    let o = eqrf(&["accept", "--suite", "fig6"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL [fig6]"));
}

#[test]
fn accept_rejects_unknown_suite() {
    let o = eqrf(&["accept", "--suite", "fig2"]);
    assert_eq!(o.status.code(), Some(2));
}
