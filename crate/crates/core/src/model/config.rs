//! TOML configuration files describing a problem instance.
//!
//! ```toml
//! builtin = "hopf"            # optional: start from a built-in field
//!
//! [system]                    # required unless `builtin` is given
//! psi1 = "x1 - x2 - x1*(x1^2 + x2^2)"
//! psi2 = "x1 + x2 - x2*(x1^2 + x2^2)"
//! # jac11, jac12, jac21, jac22: optional analytic Jacobian (all four or none)
//!
//! [perturbation]              # optional, φ ≡ 0 when absent
//! phi1 = "cos(t)"
//! phi2 = "sin(t)"
//! clock = "scaled"            # or "absolute"
//! kinks = [0.25, 0.75]        # phase fractions of the forcing period
//!
//! [analysis]
//! seed = [1.3, 0.0]
//! period_guess = 6.3
//! tol = 1e-12
//! frame_grid = 1024
//! theta_grid = 256
//! eps = [0.02, 0.01]
//! ```

use serde::Deserialize;
use thiserror::Error;

use super::expr::{parse_expression, Env, ExprError, ExpressionProgram, Var};
use super::{ForcingClock, PlanarSystem};
use crate::linalg::{Mat2, Vec2};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Toml(String),
    #[error("missing field `{0}`")]
    Missing(&'static str),
    #[error("in `{key}`: {source}")]
    Expression {
        key: String,
        #[source]
        source: ExprError,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    builtin: Option<String>,
    system: Option<RawSystem>,
    perturbation: Option<RawPerturbation>,
    #[serde(default)]
    analysis: RawAnalysis,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    psi1: Option<String>,
    psi2: Option<String>,
    jac11: Option<String>,
    jac12: Option<String>,
    jac21: Option<String>,
    jac22: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPerturbation {
    phi1: Option<String>,
    phi2: Option<String>,
    clock: Option<String>,
    kinks: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnalysis {
    seed: Option<[f64; 2]>,
    period_guess: Option<f64>,
    tol: Option<f64>,
    frame_grid: Option<usize>,
    theta_grid: Option<usize>,
    degree_grid: Option<usize>,
    eps: Option<Vec<f64>>,
}

/// Numerical knobs read from the `[analysis]` table.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct AnalysisSettings {
    pub seed: Vec2Serde,
    pub period_guess: Option<f64>,
    pub tol: f64,
    pub frame_grid: usize,
    pub theta_grid: usize,
    pub degree_grid: usize,
    pub eps: Vec<f64>,
}

/// `[x1, x2]` as it appears in configs and reports.
pub type Vec2Serde = [f64; 2];

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self {
            seed: [1.0, 0.0],
            period_guess: None,
            tol: 1e-12,
            frame_grid: 1024,
            theta_grid: 256,
            degree_grid: 256,
            eps: vec![0.01],
        }
    }
}

impl AnalysisSettings {
    pub fn seed(&self) -> Vec2 {
        Vec2::new(self.seed[0], self.seed[1])
    }
}

#[derive(Debug, Clone)]
pub struct SystemConfig {
    pub system: PlanarSystem,
    pub analysis: AnalysisSettings,
}

fn program(key: &str, src: &str) -> Result<ExpressionProgram, ConfigError> {
    parse_expression(src).map_err(|source| ConfigError::Expression {
        key: key.to_string(),
        source,
    })
}

fn autonomous(key: &str, p: &ExpressionProgram) -> Result<(), ConfigError> {
    if p.variables().iter().any(|v| matches!(v, Var::T | Var::Eps)) {
        return Err(ConfigError::Invalid(format!(
            "`{key}` must depend on x1 and x2 only"
        )));
    }
    Ok(())
}

fn at(x: &Vec2) -> Env {
    Env {
        x1: x.x,
        x2: x.y,
        ..Env::default()
    }
}

pub fn parse_config(text: &str) -> Result<SystemConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Toml(e.to_string()))?;

    let mut system = match (&raw.builtin, &raw.system) {
        (Some(name), None) => PlanarSystem::builtin(name).ok_or_else(|| {
            ConfigError::Invalid(format!(
                "unknown builtin `{name}` (known: {})",
                PlanarSystem::BUILTINS.join(", ")
            ))
        })?,
        (Some(_), Some(_)) => {
            return Err(ConfigError::Invalid(
                "`builtin` and [system] are mutually exclusive".into(),
            ))
        }
        (None, None) => return Err(ConfigError::Missing("system")),
        (None, Some(s)) => {
            let p1 = program("system.psi1", s.psi1.as_deref().ok_or(ConfigError::Missing("system.psi1"))?)?;
            let p2 = program("system.psi2", s.psi2.as_deref().ok_or(ConfigError::Missing("system.psi2"))?)?;
            autonomous("system.psi1", &p1)?;
            autonomous("system.psi2", &p2)?;
            let mut sys = PlanarSystem::new("config", move |x: &Vec2| {
                let env = at(x);
                Vec2::new(p1.eval(&env), p2.eval(&env))
            });
            let jac = [&s.jac11, &s.jac12, &s.jac21, &s.jac22];
            let given = jac.iter().filter(|j| j.is_some()).count();
            if given == 4 {
                let keys = ["system.jac11", "system.jac12", "system.jac21", "system.jac22"];
                let mut progs = Vec::with_capacity(4);
                for (k, src) in keys.iter().zip(jac) {
                    let p = program(k, src.as_deref().unwrap_or_default())?;
                    autonomous(k, &p)?;
                    progs.push(p);
                }
                sys = sys.with_jacobian(move |x: &Vec2| {
                    let env = at(x);
                    Mat2::new(
                        progs[0].eval(&env),
                        progs[1].eval(&env),
                        progs[2].eval(&env),
                        progs[3].eval(&env),
                    )
                });
            } else if given != 0 {
                return Err(ConfigError::Invalid(
                    "give all four Jacobian entries or none".into(),
                ));
            }
            sys
        }
    };

    if let Some(p) = &raw.perturbation {
        let phi1 = program("perturbation.phi1", p.phi1.as_deref().unwrap_or("0"))?;
        let phi2 = program("perturbation.phi2", p.phi2.as_deref().unwrap_or("0"))?;
        system = system.with_forcing(move |t, x: &Vec2, eps| {
            let env = Env { t, x1: x.x, x2: x.y, eps };
            Vec2::new(phi1.eval(&env), phi2.eval(&env))
        });
        let clock = match p.clock.as_deref() {
            None | Some("scaled") => ForcingClock::Scaled,
            Some("absolute") => ForcingClock::Absolute,
            Some(other) => {
                return Err(ConfigError::Invalid(format!(
                    "perturbation.clock must be `scaled` or `absolute`, got `{other}`"
                )))
            }
        };
        system = system.with_clock(clock);
        if let Some(k) = &p.kinks {
            if k.iter().any(|f| !(0.0..1.0).contains(f)) {
                return Err(ConfigError::Invalid(
                    "perturbation.kinks must lie in [0, 1)".into(),
                ));
            }
            system = system.with_kinks(k.clone());
        }
    }

    let mut analysis = AnalysisSettings::default();
    let a = &raw.analysis;
    if let Some(s) = a.seed {
        analysis.seed = s;
    }
    analysis.period_guess = a.period_guess;
    if let Some(t) = a.tol {
        analysis.tol = t;
    }
    if let Some(n) = a.frame_grid {
        analysis.frame_grid = n;
    }
    if let Some(n) = a.theta_grid {
        if n < 64 {
            return Err(ConfigError::Invalid("analysis.theta_grid must be >= 64".into()));
        }
        analysis.theta_grid = n;
    }
    if let Some(n) = a.degree_grid {
        analysis.degree_grid = n;
    }
    if let Some(e) = &a.eps {
        analysis.eps = e.clone();
    }
    Ok(SystemConfig { system, analysis })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HOPF_ROT: &str = r#"
[system]
psi1 = "x1 - x2 - x1*(x1^2+x2^2)"
psi2 = "x1 + x2 - x2*(x1^2+x2^2)"

[perturbation]
phi1 = "cos(t)"
phi2 = "sin(t)"

[analysis]
seed = [1.3, 0.0]
"#;

    #[test]
    fn expression_system_matches_builtin() {
        let cfg = parse_config(HOPF_ROT).unwrap();
        let b = PlanarSystem::hopf_rot();
        for k in 0..20 {
            let x = Vec2::new(-1.5 + 0.15 * k as f64, 0.7 - 0.1 * k as f64);
            assert!((cfg.system.psi(&x) - b.psi(&x)).norm() < 1e-14);
            assert!((cfg.system.phi(0.3 * k as f64, &x, 0.0) - b.phi(0.3 * k as f64, &x, 0.0)).norm() < 1e-14);
            assert!((cfg.system.jacobian(&x) - b.jacobian(&x)).amax() < 1e-6);
        }
        assert_eq!(cfg.analysis.seed, [1.3, 0.0]);
        assert_eq!(cfg.system.clock(), ForcingClock::Scaled);
    }

    #[test]
    fn builtin_with_override() {
        let cfg = parse_config("builtin = \"hopf\"\n[perturbation]\nphi1 = \"tri(t)\"\nkinks = [0.25, 0.75]\n").unwrap();
        assert_eq!(cfg.system.kinks(), &[0.25, 0.75]);
        assert!(!cfg.system.forcing_is_zero());
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_config(""), Err(ConfigError::Missing("system"))));
        assert!(matches!(
            parse_config("[system]\npsi1 = \"x1\"\n"),
            Err(ConfigError::Missing("system.psi2"))
        ));
        let e = parse_config("[system]\npsi1 = \"x1 +\"\npsi2 = \"x2\"\n").unwrap_err();
        assert!(matches!(e, ConfigError::Expression { ref key, .. } if key == "system.psi1"));
        let e = parse_config("[system]\npsi1 = \"x1*t\"\npsi2 = \"x2\"\n").unwrap_err();
        assert!(matches!(e, ConfigError::Invalid(_)));
        let e = parse_config("builtin = \"nope\"").unwrap_err();
        assert!(matches!(e, ConfigError::Invalid(_)));
        let e = parse_config("[system]\npsi1 = \"x1\"\npsi2 = \"x2\"\njac11 = \"1\"\n").unwrap_err();
        assert!(matches!(e, ConfigError::Invalid(_)));
        let e = parse_config("builtin = \"hopf\"\n[perturbation]\nclock = \"weird\"\n").unwrap_err();
        assert!(matches!(e, ConfigError::Invalid(_)));
    }

    #[test]
    fn toml_errors_cite_line_and_column() {
        let e = parse_config("builtin = \"hopf\"\n[analysis]\ntol = = 3\n").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("line 3"), "{msg}");
        assert!(msg.contains("column"), "{msg}");
    }
}
