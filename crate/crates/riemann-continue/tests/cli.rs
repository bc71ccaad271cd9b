use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_riemann-continue"));
    c.env_remove("RC_PRECISION");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json_of(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

/// Maclaurin coefficients of K(ω) as a series file.
fn k_series(dir: &Path, n: usize) -> PathBuf {
    use riemann::numerics::{format_float, BigComplex};
    use riemann::special::elliptic_k_series;
    let s = elliptic_k_series(n, 256);
    let coeffs: Vec<String> = s.coeffs.iter().map(|c: &BigComplex| format_float(&c.re, 70)).collect();
    let path = dir.join(format!("k{n}.json"));
    let v = serde_json::json!({"label": format!("K, {n} terms"), "coefficients": coeffs});
    std::fs::write(&path, v.to_string()).unwrap();
    path
}

#[test]
fn maps_list_reports_moduli() {
    let o = run(&["maps", "list", "--precision", "30"]);
    assert!(o.status.success());
    let v = json_of(&o);
    assert_eq!(v["format"], "rc-v1");
    let maps = v["result"]["maps"].as_array().unwrap();
    let get = |n: &str| -> f64 {
        let m = maps.iter().find(|m| m["name"] == n).unwrap();
        m["acceleration_modulus"].as_str().unwrap().parse().unwrap()
    };
    assert_eq!(get("one-cut"), 0.25);
    assert_eq!(get("two-cut"), 0.5);
    assert!((get("two-puncture") - 0.228_473_4).abs() < 1e-6);
    assert!((get("nome") - 1.0 / 16.0).abs() < 1e-15);
}

#[test]
fn continue_reports_bad_points_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let k = k_series(dir.path(), 10);
    let o = run(&["continue", "--coeffs", k.to_str().unwrap(), "--map", "nome", "--at", "0.5", "--at", "1.7e300"]);
    assert_eq!(o.status.code(), Some(2));
    let v = json_of(&o);
    let pts = v["result"]["points"].as_array().unwrap();
    assert!(pts[0]["value"].is_string());
    assert!(pts[1]["error"].is_string());
    assert_eq!(v["provenance"]["inputs"][0]["terms"], 10);
}

#[test]
fn output_is_deterministic_and_parses_back() {
    let dir = tempfile::tempdir().unwrap();
    let k = k_series(dir.path(), 10);
    let args = ["extrapolate", "--coeffs", k.to_str().unwrap(), "--map", "nome", "--order", "40", "--precision", "40"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let v = json_of(&a);
    let c = v["result"]["series"]["coefficients"].as_array().unwrap();
    assert_eq!(c.len(), 40);
    // the emitted series is itself a valid input file
    let again = dir.path().join("again.json");
    std::fs::write(&again, v["result"]["series"].to_string()).unwrap();
    let o = run(&["root-test", "--coeffs", again.to_str().unwrap(), "--precision", "40"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json_of(&o)["result"]["radius"].as_f64().unwrap();
    assert!((r - 1.0).abs() < 0.1, "{r}");
}

#[test]
fn rational_inputs_need_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("r.json");
    std::fs::write(&p, r#"{"label": "geometric", "coefficients": ["1", "1/2", "1/4", "1/8"]}"#).unwrap();
    let o = run(&["pade", "--coeffs", p.to_str().unwrap(), "--m", "1", "--n", "1"]);
    assert_eq!(o.status.code(), Some(1));
    std::fs::write(&p, r#"{"label": "geometric", "rational": true, "coefficients": ["1", "1/2", "1/4", "1/8"]}"#).unwrap();
    let csv = dir.path().join("poles.csv");
    let o = run(&["pade", "--coeffs", p.to_str().unwrap(), "--m", "1", "--n", "1", "--poles", "--csv", csv.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_of(&o);
    let pole: f64 = v["result"]["pole_report"]["poles"][0]["location"].as_str().unwrap().parse().unwrap();
    assert!((pole - 2.0).abs() < 1e-30);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("re,im,froissart\n2e0,"), "{text}");
}

#[test]
fn scan_circle_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let k = k_series(dir.path(), 10);
    let out = dir.path().join("scan.csv");
    let o = run(&["scan-circle", "--coeffs", k.to_str().unwrap(), "--map", "nome", "--radius", "0.9", "--samples", "16", "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_path(&out).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["theta", "abs_value"]);
    assert_eq!(r.records().count(), 16);
}

#[test]
fn eliminate_and_probe_on_k() {
    let dir = tempfile::tempdir().unwrap();
    let k = k_series(dir.path(), 30);
    let o = run(&["eliminate", "--coeffs", k.to_str().unwrap(), "--omega0", "1", "--alpha", "0", "--log", "--map", "phi0", "--precision", "40"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_of(&o);
    assert_eq!(v["result"]["beta"], "-5e-1");
    assert_eq!(v["result"]["series"]["coefficients"].as_array().unwrap().len(), 31);
    let o = run(&["probe", "--coeffs", k.to_str().unwrap(), "--omega0-grid", "1,0.5", "--alpha-grid", "0,-0.5", "--with-log", "--precision", "60"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_of(&o);
    let best = &v["result"]["hypotheses"][0];
    assert_eq!(best["omega0"], "1e0");
    assert_eq!(best["alpha"], "0e0");
    assert_eq!(best["analytic"], true);
}

#[test]
fn painleve_first_pole() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("poles.csv");
    let o = run(&["painleve-p1", "--terms", "30", "--map", "two-cut", "--poles", "1", "--precision", "30", "--csv", csv.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_of(&o);
    let x = &v["result"]["poles"][0]["x"];
    let x: f64 = x.as_str().or_else(|| x[0].as_str()).unwrap().parse().unwrap();
    assert!((x + 2.384_168_769_568_816_6).abs() < 1e-12);
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("re,im\n-2.38416876956881663929"));
}

#[test]
fn usage_errors_fail() {
    assert!(!run(&["continue", "--map", "nome"]).status.success());
    let o = run(&["maps", "series", "--map", "no-such-map", "--order", "4"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown map"));
}

#[test]
fn precision_from_environment() {
    let o = bin().args(["maps", "series", "--map", "two-cut", "--order", "3"]).env("RC_PRECISION", "20").output().unwrap();
    assert!(o.status.success());
    assert_eq!(json_of(&o)["provenance"]["precision_digits"], 20);
}
