use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sureid"));
    c.env_remove("SUREID_QUAD_TOL");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn sureid")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn write_values(path: &Path, values: &[f64]) {
    let mut s = String::from("value\n");
    for v in values {
        s.push_str(&format!("{v:.17e}\n"));
    }
    std::fs::write(path, s).unwrap();
}

fn read_values(path: &Path) -> Vec<f64> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("value"));
    lines.map(|l| l.parse().unwrap()).collect()
}

/// Deterministic test signal: a few steps plus a pseudo-random wiggle.
fn signal(n: usize) -> Vec<f64> {
    let mut state = 0x2545_f491_4f6c_dd1du64;
    (0..n)
        .map(|i| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            let u = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            let t = i as f64 / n as f64;
            let step = if t < 0.3 { 0.0 } else if t < 0.6 { 4.0 } else { -2.0 };
            step + u
        })
        .collect()
}

#[test]
fn risk_curve_csv_schema_and_gaussian_values() {
    let out = ok(&["risk-curve", "--model", "normal", "--lambda", "2", "--range", "-3:3:0.5"]);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("x,risk,variance_term,g_squared,cross_term"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|f| f.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 13);
    for r in &rows {
        assert_eq!(r.len(), 5);
        let x = r[0];
        let expect = 1.0 + (x * x).min(4.0) - if x.abs() < 2.0 { 2.0 } else { 0.0 };
        assert!((r[1] - expect).abs() < 1e-12, "x={x}: {} vs {expect}", r[1]);
        assert!((r[1] - (r[2] + r[3] + r[4])).abs() < 1e-12);
    }
}

#[test]
fn risk_curve_laplace_at_zero() {
    let out = ok(&["risk-curve", "--model", "laplace", "--range", "0:0:1"]);
    let v: f64 = out.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    let s2 = 2f64.sqrt();
    let h = |x: f64| if x <= 0.0 { 0.5 * (s2 * x).exp() } else { 1.0 - 0.5 * (-s2 * x).exp() };
    assert!((v - (1.0 + 2.0 * (h(-2.0) - h(2.0)))).abs() < 1e-9);
}

#[test]
fn risk_curve_uniform_is_unit_variance() {
    let out = ok(&["risk-curve", "--model", "uniform", "--range", "0:0:1"]);
    let f: Vec<f64> = out.lines().nth(1).unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert!((f[2] - 1.0).abs() < 1e-12);
    let lib = sureid::risk::unbiased_risk_uniform_soft(3f64.sqrt(), 2.0, 0.0).unwrap();
    assert!((f[1] - lib.value).abs() < 1e-15);
    assert!((f[4] - lib.cross_term).abs() < 1e-15);
}

#[test]
fn risk_curve_json_schema() {
    let out = ok(&["risk-curve", "--model", "sech", "--estimator", "mid", "--range", "-1:1:1", "--format", "json"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for r in rows {
        for key in ["x", "value", "variance_term", "g_squared", "cross_term"] {
            assert!(r[key].is_f64(), "missing {key}");
        }
        assert!(r["model_id"].is_string());
        assert_eq!(r["estimator_id"], "mid(2)");
    }
}

#[test]
fn json_model_file_and_inline() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.json");
    std::fs::write(&p, r#"{"family": "gamma", "shape": 2.0, "scale": 0.7071067811865476}"#).unwrap();
    let a = ok(&["risk-curve", "--model", p.to_str().unwrap(), "--range", "-1:1:0.5"]);
    let b = ok(&["risk-curve", "--model", r#"{"family":"gamma","shape":2.0,"scale":0.7071067811865476}"#, "--range", "-1:1:0.5"]);
    let c = ok(&["risk-curve", "--model", "gamma:2", "--range", "-1:1:0.5"]);
    assert_eq!(a, b);
    let pa: Vec<f64> = a.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    let pc: Vec<f64> = c.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    for (x, y) in pa.iter().zip(&pc) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn config_file_and_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"model": "normal", "lambda": 1.0, "range": "0:0:1"}"#).unwrap();
    let from_file = ok(&["--config", cfg.to_str().unwrap(), "risk-curve"]);
    let r: f64 = from_file.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(r, -1.0);
    let overridden = ok(&["--config", cfg.to_str().unwrap(), "risk-curve", "--range", "1.5:1.5:1"]);
    let r: f64 = overridden.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(r, 2.0);

    std::fs::write(&cfg, r#"{"model": "normal", "lambdaa": 1.0}"#).unwrap();
    let bad = run(&["--config", cfg.to_str().unwrap(), "risk-curve"]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("lambdaa"));
}

#[test]
fn config_accepts_model_object() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"model": {"family": "normal"}, "range": "0:0:1"}"#).unwrap();
    let out = ok(&["--config", cfg.to_str().unwrap(), "risk-curve"]);
    let r: f64 = out.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(r, -1.0);
}

#[test]
fn invalid_inputs_are_rejected() {
    for args in [
        &["risk-curve", "--model", "cauchy"][..],
        &["risk-curve", "--range", "1:0:0.1"],
        &["risk-curve", "--range", "0:1"],
        &["risk-curve", "--lambda", "-1"],
        &["select-threshold", "--model", "normal"],
        &["denoise", "--input", "/nonexistent/file.csv"],
    ] {
        let out = run(args);
        assert!(!out.status.success(), "{args:?} should fail");
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"), "{args:?}");
    }
    let out = bin().env("SUREID_QUAD_TOL", "abc").args(["risk-curve"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn quad_tol_env_is_honored() {
    let out = bin()
        .env("SUREID_QUAD_TOL", "1e-10")
        .args(["risk-curve", "--model", "sech", "--range", "0:0:1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let default = ok(&["risk-curve", "--model", "sech", "--range", "0:0:1"]);
    let a: f64 = String::from_utf8(out.stdout).unwrap().lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    let b: f64 = default.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((a - b).abs() < 1e-8);
}

#[test]
fn verify_report_schema_and_corruption() {
    let out = run(&["verify", "--model", "laplace", "--theta", "-1,0.7", "--samples", "20000"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], true);
    let cells = v["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 2 * 2 * 2);
    for c in cells {
        assert!(c["monte_carlo"]["se"].as_f64().unwrap() > 0.0);
        assert!(c["quadrature"]["abs_diff"].as_f64().unwrap() < 1e-6);
        assert!(c["unbiasedness"]["abs_diff"].as_f64().unwrap() < 1e-6);
    }

    let bad = run(&["verify", "--model", "laplace", "--theta", "-1,0.7", "--samples", "20000", "--corrupt-kernel"]);
    assert_eq!(bad.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&bad.stdout).unwrap();
    assert_eq!(v["passed"], false);
    assert_eq!(v["failures"].as_u64().unwrap(), 8);
}

#[test]
fn select_threshold_zero_vector_gives_cap() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("z.csv");
    write_values(&p, &[0.0; 64]);
    let out = ok(&["select-threshold", "--input", p.to_str().unwrap(), "--model", "normal"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    let cap = (2.0 * 64f64.ln()).sqrt();
    assert!((v["cap"].as_f64().unwrap() - cap).abs() < 1e-12);
    assert_eq!(v["lambda"].as_f64().unwrap(), v["cap"].as_f64().unwrap());
    for key in ["level", "candidate_count", "risk_at_lambda"] {
        assert!(!v[key].is_null(), "missing {key}");
    }
}

#[test]
fn select_threshold_matches_gaussian_brute_force() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.csv");
    let x: Vec<f64> = signal(256).iter().map(|v| v * 1.7).collect();
    write_values(&p, &x);
    let out = ok(&["select-threshold", "--input", p.to_str().unwrap(), "--model", "normal"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    let lam = v["lambda"].as_f64().unwrap();
    let sure = |l: f64| -> f64 {
        x.iter().map(|&xi| 1.0 + (xi * xi).min(l * l) - if xi.abs() < l { 2.0 } else { 0.0 }).sum()
    };
    let cap = v["cap"].as_f64().unwrap();
    let best = (0..=4000).map(|i| sure(cap * i as f64 / 4000.0)).fold(f64::INFINITY, f64::min);
    let best = x.iter().map(|xi| xi.abs()).filter(|&a| a <= cap).map(sure).fold(best, f64::min);
    assert!(sure(lam) <= best + 1e-9, "{} vs {}", sure(lam), best);
}

#[test]
fn denoise_forced_zero_threshold_roundtrips() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.csv");
    let out = dir.path().join("out.csv");
    let report = dir.path().join("r.json");
    let x = signal(256);
    write_values(&input, &x);
    for wavelet in ["haar", "d4"] {
        ok(&[
            "denoise", "--input", input.to_str().unwrap(), "--model", "laplace", "--wavelet", wavelet,
            "--levels", "5", "--lambda", "0", "--out", out.to_str().unwrap(), "--report", report.to_str().unwrap(),
        ]);
        let y = read_values(&out);
        assert_eq!(y.len(), x.len());
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn denoise_report_schema() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.csv");
    let report = dir.path().join("r.json");
    write_values(&input, &signal(512));
    ok(&[
        "denoise", "--input", input.to_str().unwrap(), "--model", "sech", "--levels", "4", "--keep-low", "2",
        "--out", dir.path().join("o.csv").to_str().unwrap(), "--report", report.to_str().unwrap(),
    ]);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["wavelet"], "d4");
    assert_eq!(v["len"], 512);
    let bands = v["bands"].as_array().unwrap();
    assert_eq!(bands.len(), 5);
    let thresholded: Vec<bool> = bands.iter().map(|b| b["thresholded"].as_bool().unwrap()).collect();
    assert_eq!(thresholded, [false, false, true, true, true]);
    for b in bands {
        for key in ["level", "lambda", "risk", "n_candidates", "noise_variance"] {
            assert!(!b[key].is_null(), "missing {key}");
        }
        assert!(b["noise_variance"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn denoise_rejects_bad_length() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.csv");
    write_values(&input, &signal(100));
    let out = run(&["denoise", "--input", input.to_str().unwrap(), "--levels", "4"]);
    assert!(!out.status.success());
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.csv");
    write_values(&input, &signal(256));
    let args = ["denoise", "--input", input.to_str().unwrap(), "--model", "gamma"];
    assert_eq!(ok(&args), ok(&args));
    let v = ["verify", "--model", "sech", "--theta", "0", "--samples", "5000", "--seed", "7"];
    assert_eq!(ok(&v), ok(&v));
}
