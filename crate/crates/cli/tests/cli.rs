use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cbw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cbw"))
        .args(args)
        .output()
        .expect("spawn cbw")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn load_schema(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(name);
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_valid(schema_file: &str, instance: &Value) {
    let series = load_schema("fringe_series.schema.json");
    let registry = jsonschema::Registry::new()
        .add("urn:cbw:schema:fringe_series", &series)
        .unwrap()
        .prepare()
        .unwrap();
    let schema = load_schema(schema_file);
    let validator = jsonschema::options()
        .with_registry(&registry)
        .build(&schema)
        .unwrap();
    let errors: Vec<String> = validator
        .iter_errors(instance)
        .map(|e| format!("{} at {}", e, e.instance_path()))
        .collect();
    assert!(
        errors.is_empty(),
        "{schema_file}: {errors:#?}\n{instance:#}"
    );
}

fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn analytic_csv_for_two_stages() {
    let o = cbw(&["analytic", "--modules", "2", "--phi", "0", "--points", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("psi_rad,i_gamma,i_delta"));
    let r = rows(&text);
    assert_eq!(r.len(), 5);
    for row in r {
        let psi = row[0];
        assert!((row[1] - (1.0 + (2.0 * psi).cos()) / 2.0).abs() < 1e-12);
        assert!((row[1] + row[2] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn phase_syntax_is_equivalent() {
    let a = stdout(&cbw(&["analytic", "--phi", "pi", "--points", "7"]));
    let b = stdout(&cbw(&["analytic", "--phi", "deg:180", "--points", "7"]));
    let c = stdout(&cbw(&[
        "analytic",
        "--phi",
        "3.141592653589793",
        "--points",
        "7",
    ]));
    assert_eq!(a, b);
    assert_eq!(a, c);
    for row in rows(&a) {
        assert!((row[1] - 1.0).abs() < 1e-12 && row[2].abs() < 1e-12);
    }
    let bad = cbw(&["analytic", "--phi", "pie"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(cbw(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(cbw(&["analytic", "--bogus"]).status.code(), Some(1));
    assert_eq!(cbw(&["analytic", "--modules", "0"]).status.code(), Some(1));
    assert_eq!(cbw(&["simulate", "--threads", "0"]).status.code(), Some(1));
    assert_eq!(cbw(&["analyze"]).status.code(), Some(1));
    let help = cbw(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(stdout(&help).contains("sensitivity"));
}

#[test]
fn config_file_precedence_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# two stages\nmodules = 1\npoints = 3\n").unwrap();
    let cfg_s = cfg.to_str().unwrap();

    let from_file = rows(&stdout(&cbw(&["analytic", "--config", cfg_s])));
    assert_eq!(from_file.len(), 3);
    // Single stage: I_gamma = (1 - cos psi) / 2, so 1 at psi = pi.
    assert!((from_file[1][1] - 1.0).abs() < 1e-12);

    let overridden = rows(&stdout(&cbw(&[
        "analytic", "--config", cfg_s, "--points", "4",
    ])));
    assert_eq!(overridden.len(), 4);

    std::fs::write(&cfg, "modules = 2\nunknown_key = 3\n").unwrap();
    let o = cbw(&["analytic", "--config", cfg_s]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("unknown_key") && err.contains(":2:"), "{err}");

    std::fs::write(&cfg, "modules = 2\npoints = many\n").unwrap();
    let o = cbw(&["analytic", "--config", cfg_s]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("run.cfg:2:10"), "{}", stderr(&o));
}

#[test]
fn simulate_writes_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.csv");
    let o = cbw(&[
        "simulate",
        "--modules",
        "1",
        "--points",
        "200",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 201);
    let again = dir.path().join("again.csv");
    cbw(&[
        "simulate",
        "--modules",
        "1",
        "--points",
        "200",
        "--seed",
        "3",
        "--out",
        again.to_str().unwrap(),
    ]);
    assert_eq!(text, std::fs::read_to_string(&again).unwrap());
}

#[test]
fn scan_summary_and_analyze_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scan");
    let o = cbw(&[
        "scan",
        "--modules",
        "1",
        "--seed",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in [
        "counts.csv",
        "counts.svg",
        "classical.csv",
        "classical.svg",
        "summary.json",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_valid("scan_summary.schema.json", &summary);

    let counts = out.join("counts.csv");
    let o = cbw(&["analyze", "--in", counts.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_valid("analyze.schema.json", &report);
    let fringes = |col: &str| {
        report["series"]
            .as_array()
            .unwrap()
            .iter()
            .find(|s| s["column"] == col)
            .map(|s| s["fringe_count"].as_f64().unwrap())
            .unwrap()
    };
    assert_eq!(fringes("coinc"), 21.0);
    assert_eq!(fringes("d1"), 10.5);

    let o = cbw(&[
        "analyze",
        "--in",
        counts.to_str().unwrap(),
        "--column",
        "nope",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn flat_trace_is_an_analysis_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("flat.csv");
    // Symmetric coupling: the lower port is dark and the upper one constant.
    let o = cbw(&[
        "simulate",
        "--modules",
        "2",
        "--phi",
        "pi",
        "--points",
        "500",
        "--noise",
        "none",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = cbw(&["analyze", "--in", out.to_str().unwrap(), "--column", "d2"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn sensitivity_report_matches_schema() {
    let o = cbw(&["sensitivity", "--m-max", "3", "--grid", "30000"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_valid("sensitivity.schema.json", &v);
    let reports = v["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 3);
    for r in reports {
        let m = r["m"].as_f64().unwrap();
        assert!((r["ratio_to_classical"].as_f64().unwrap() * m - 1.0).abs() < 1e-3);
    }
    let o = cbw(&["sensitivity", "--m-max", "5", "--grid", "100"]);
    assert_eq!(o.status.code(), Some(1));
}
