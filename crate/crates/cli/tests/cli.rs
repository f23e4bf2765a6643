use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cyclepersist"))
}

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn schema() -> jsonschema::Validator {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs/report.schema.json");
    let s: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&s).unwrap()
}

fn assert_valid(v: &Value) {
    let errors: Vec<String> = schema().iter_errors(v).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

#[test]
fn analyze_hopf_rot() {
    let out = run(&["analyze", config("hopf_rot.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert_valid(&r);
    assert_eq!(r["degree"]["dB"], 0);
    assert_eq!(r["degree"]["lemma5_value"], 0);
    assert_eq!(r["degree"]["theorem3_applicable"], true);
    assert_eq!(r["bifurcation"]["zeros"].as_array().unwrap().len(), 2);
    assert!((r["cycle"]["period"].as_f64().unwrap() - 2.0 * std::f64::consts::PI).abs() < 1e-8);
    assert_eq!(r["provenance"]["config_sha256"].as_str().unwrap().len(), 64);
    assert!(r.get("generated_at").is_none());
}

#[test]
fn analyze_zero_forcing_is_a_hypothesis_failure() {
    let out = run(&["analyze", config("zero_phi.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bifurcation function identically zero"), "{err}");
    let r = json(&out);
    assert_valid(&r);
    assert_eq!(r["status"], "hypothesis_failure");
}

#[test]
fn analyze_vanishing_field_is_a_hypothesis_failure() {
    let out = run(&["analyze", config("hopf_pr1_fail.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("vanishes on the cycle"));
}

#[test]
fn analyze_vdp_against_halved_tolerance() {
    // vdp.toml runs at the 1e-13 floor, so halve from twice that
    let path = config("vdp.toml");
    let a = json(&run(&["analyze", path.to_str().unwrap(), "--tol", "2e-13"]));
    let b = json(&run(&["analyze", path.to_str().unwrap()]));
    assert_valid(&a);
    assert!(a["floquet"]["diagnostics"]["lemma1_max"].as_f64().unwrap() <= 1e-6);
    assert_eq!(a["degree"]["dB"], b["degree"]["dB"]);
    let pa = a["cycle"]["period"].as_f64().unwrap();
    let pb = b["cycle"]["period"].as_f64().unwrap();
    assert!((pa - pb).abs() < 1e-9, "{pa} {pb}");
    let ra = a["floquet"]["rho"].as_f64().unwrap();
    let rb = b["floquet"]["rho"].as_f64().unwrap();
    assert!((ra / rb - 1.0).abs() < 1e-6);
    let za: Vec<f64> = a["bifurcation"]["zeros"].as_array().unwrap().iter().map(|z| z["theta"].as_f64().unwrap()).collect();
    let zb: Vec<f64> = b["bifurcation"]["zeros"].as_array().unwrap().iter().map(|z| z["theta"].as_f64().unwrap()).collect();
    assert_eq!(za.len(), zb.len());
    for (x, y) in za.iter().zip(&zb) {
        assert!((x - y).abs() < 1e-7);
    }
}

#[test]
fn analyze_is_deterministic_and_timestamp_is_isolated() {
    let path = config("hopf_cos.toml");
    let a = run(&["analyze", path.to_str().unwrap()]);
    let b = bin()
        .args(["analyze", path.to_str().unwrap()])
        .env("CYCLEPERSIST_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["analyze", path.to_str().unwrap(), "--timestamp"]);
    let mut v = json(&c);
    assert_valid(&v);
    assert!(v["generated_at"].as_u64().unwrap() > 1_600_000_000);
    v.as_object_mut().unwrap().remove("generated_at");
    assert_eq!(v, json(&a));
}

#[test]
fn artifacts_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "analyze",
        config("hopf_rot.toml").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--format",
        "all",
        "--grid",
        "128",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    for f in ["analysis.json", "f0.csv", "f1.csv", "f_curve.csv", "f0.svg", "f1.svg", "f_curve.svg"] {
        let p = dir.path().join(f);
        assert!(p.exists(), "{f}");
    }
    let f0 = std::fs::read_to_string(dir.path().join("f0.csv")).unwrap();
    assert_eq!(f0.lines().next(), Some("theta,f0"));
    assert_eq!(f0.lines().count(), 129);
    let svg = std::fs::read_to_string(dir.path().join("f_curve.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<polyline"));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("analysis.json")).unwrap()).unwrap();
    assert_eq!(r["provenance"]["settings"]["theta_grid"], 128);
}

#[test]
fn csv_and_svg_need_an_output_directory() {
    let out = run(&["analyze", config("hopf_rot.toml").to_str().unwrap(), "--format", "svg"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn verify_rejects_nonpositive_eps() {
    for eps in ["0", "-0.01", "0.01,0"] {
        let out = run(&["verify", config("hopf_rot.toml").to_str().unwrap(), "--eps", eps]);
        assert_eq!(out.status.code(), Some(3), "{eps}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("must be positive"));
    }
}

#[test]
fn verify_two_solutions_on_cubic_radii() {
    let out = run(&["verify", config("hopf_rot.toml").to_str().unwrap(), "--eps", "0.01"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert_valid(&r);
    let sols = r["persistence"]["results"][0]["solutions"].as_array().unwrap();
    assert_eq!(sols.len(), 2);
    let radius = |s: &Value| {
        let a = s["start"].as_array().unwrap();
        a[0].as_f64().unwrap().hypot(a[1].as_f64().unwrap())
    };
    assert_eq!(sols[0]["location"], "outside");
    assert_eq!(sols[1]["location"], "inside");
    assert!((radius(&sols[0]) - 1.004963).abs() < 1e-5);
    assert!((radius(&sols[1]) - 0.994962).abs() < 1e-5);
}

#[test]
fn verify_convergence_block_and_profiles() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "verify",
        config("hopf_rot.toml").to_str().unwrap(),
        "--eps",
        "0.02,0.01,0.005,0.0025",
        "--out",
        dir.path().to_str().unwrap(),
        "--format",
        "all",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_valid(&r);
    let fits = r["persistence"]["convergence"].as_array().unwrap();
    assert_eq!(fits.len(), 2);
    for f in fits {
        let slope = f["slope"].as_f64().unwrap();
        assert!((slope - 2.0).abs() <= 0.3, "{slope}");
    }
    for eps in ["0.02", "0.01", "0.005", "0.0025"] {
        for loc in ["outside", "inside"] {
            assert!(dir.path().join(format!("profile_eps{eps}_{loc}.csv")).exists());
            assert!(dir.path().join(format!("profile_eps{eps}_{loc}.svg")).exists());
        }
    }
    let conv = std::fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert_eq!(conv.lines().count(), 9);
}

#[test]
fn verify_reports_corollary1_where_pr1_fails() {
    let out = run(&["verify", config("hopf_pr1_fail.toml").to_str().unwrap(), "--eps", "0.01"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_valid(&r);
    assert!(r["degree_error"].as_str().unwrap().contains("vanishes"));
    let c1 = r["corollary1"].as_array().unwrap();
    assert_eq!(c1.len(), 2);
    for e in c1 {
        assert!(e["probe"]["ratio"].as_f64().unwrap() <= 0.7);
    }
    for s in r["persistence"]["results"][0]["solutions"].as_array().unwrap() {
        assert_eq!(s["location"], "straddles");
    }
}

#[test]
fn verify_exact_sections() {
    let out = run(&["verify", config("hopf_rot.toml").to_str().unwrap(), "--eps", "0.01", "--exact-sections"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["provenance"]["persist"]["sections"], "exact");
    let sols = r["persistence"]["results"][0]["solutions"].as_array().unwrap();
    let inner = sols.iter().find(|s| s["location"] == "inside").unwrap();
    assert!(inner["profile"]["failures"].as_array().unwrap().is_empty());
    assert!(!inner["profile"]["points"].as_array().unwrap().is_empty());
}

#[test]
fn usage_errors() {
    let out = run(&["analyze", "/nonexistent/config.toml"]);
    assert_eq!(out.status.code(), Some(3));
    let out = bin()
        .args(["analyze", config("hopf_rot.toml").to_str().unwrap()])
        .env("CYCLEPERSIST_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["analyze", config("vdp.toml").to_str().unwrap(), "--tol", "5e-14"]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["bogus"]);
    assert_eq!(out.status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "builtin = \"hopf\"\n[analysis]\ntol = = 1\n").unwrap();
    let out = run(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}
