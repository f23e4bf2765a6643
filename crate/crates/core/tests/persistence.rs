use std::path::PathBuf;

use cyclepersist_core::model::{parse_config, AnalysisSettings};
use cyclepersist_core::persist::{persistence_run, PersistOptions};
use cyclepersist_core::pipeline::{analyze, prepare};
use cyclepersist_core::selfcheck::cos_forcing_system;
use cyclepersist_core::PlanarSystem;

const EPS: [f64; 4] = [0.02, 0.01, 0.005, 0.0025];

fn config(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    std::fs::read_to_string(p).unwrap()
}

fn settings() -> AnalysisSettings {
    AnalysisSettings {
        seed: [1.3, 0.0],
        tol: 1e-13,
        theta_grid: 128,
        degree_grid: 128,
        ..AnalysisSettings::default()
    }
}

#[test]
fn phase_converges_on_cos_forcing() {
    let (_, _, bif, profile) = prepare(&cos_forcing_system(), &settings()).unwrap();
    let run = persistence_run(&bif, &profile, &EPS, &PersistOptions::default());
    assert!(run.results.iter().all(|r| r.error.is_none()));
    assert_eq!(run.convergence.len(), profile.zeros.len());
    for fit in &run.convergence {
        let err = |eps: f64| fit.phase_error.iter().find(|p| p.0 == eps).unwrap().1;
        assert!(err(0.0025) < err(0.02), "{:?}", fit.phase_error);

        let drift: Vec<f64> = fit.phase_drift.iter().map(|p| p.1).collect();
        assert_eq!(drift.len(), EPS.len());
        for w in drift.windows(2) {
            assert!(w[1] <= w[0] + 1e-6, "{drift:?}");
        }
        let slope = fit.slope.unwrap();
        assert!((slope - 2.0).abs() <= 0.3, "{slope}");
    }
}

#[test]
fn config_and_builtin_agree() {
    let cfg = parse_config(&config("hopf_rot.toml")).unwrap();
    let a = analyze(&cfg.system, &cfg.analysis).unwrap();
    let b = analyze(&PlanarSystem::hopf_rot(), &cfg.analysis).unwrap();
    assert!((a.cycle.period() - b.cycle.period()).abs() < 1e-10);
    assert!((a.frame.rho() / b.frame.rho() - 1.0).abs() < 1e-8);
    assert_eq!(a.degree.d_b, b.degree.d_b);
    assert_eq!(a.profile.zeros.len(), b.profile.zeros.len());
    for (x, y) in a.profile.zeros.iter().zip(&b.profile.zeros) {
        assert!((x.theta - y.theta).abs() < 1e-8);
    }
}

#[test]
fn vdp_config_is_attracting_with_simple_zeros() {
    let cfg = parse_config(&config("vdp.toml")).unwrap();
    let a = analyze(&cfg.system, &cfg.analysis).unwrap();
    assert!(a.frame.rho() < 1.0);
    assert!(a.profile.zeros.iter().all(|z| z.simple));
    assert!(a.profile.zeros.len() % 2 == 0);
}
