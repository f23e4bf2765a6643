//! Problem instances: the autonomous field ψ, its Jacobian and the periodic
//! perturbation φ(t, x, ε) of `ẋ = ψ(x) + ε φ(t, x, ε)`.

pub mod config;
pub mod expr;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::linalg::{Mat2, Vec2};

pub use config::{parse_config, AnalysisSettings, ConfigError, SystemConfig};
pub use expr::{parse_expression, Env, ExprError, ExpressionProgram};

pub type FieldFn = Arc<dyn Fn(&Vec2) -> Vec2 + Send + Sync>;
pub type JacobianFn = Arc<dyn Fn(&Vec2) -> Mat2 + Send + Sync>;
pub type ForcingFn = Arc<dyn Fn(f64, &Vec2, f64) -> Vec2 + Send + Sync>;

/// How the time argument of φ relates to the cycle period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ForcingClock {
    /// φ is written with period 2π; its argument is rescaled to `2π t / T`
    /// once the cycle period `T` is known.
    Scaled,
    /// φ is evaluated at the raw system time.
    Absolute,
}

#[derive(Clone)]
pub struct PlanarSystem {
    name: String,
    psi: FieldFn,
    jac: Option<JacobianFn>,
    phi: ForcingFn,
    phi_is_zero: bool,
    clock: ForcingClock,
    /// Multiplies system time before it is handed to φ.
    time_scale: f64,
    period: Option<f64>,
    kinks: Vec<f64>,
}

impl fmt::Debug for PlanarSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PlanarSystem")
            .field("name", &self.name)
            .field("analytic_jacobian", &self.jac.is_some())
            .field("clock", &self.clock)
            .field("period", &self.period)
            .field("kinks", &self.kinks)
            .finish()
    }
}

impl PlanarSystem {
    /// Unforced system with a finite-difference Jacobian.
    pub fn new<F>(name: impl Into<String>, psi: F) -> Self
    where
        F: Fn(&Vec2) -> Vec2 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            psi: Arc::new(psi),
            jac: None,
            phi: Arc::new(|_, _, _| Vec2::zeros()),
            phi_is_zero: true,
            clock: ForcingClock::Scaled,
            time_scale: 1.0,
            period: None,
            kinks: Vec::new(),
        }
    }

    pub fn with_jacobian<J>(mut self, jac: J) -> Self
    where
        J: Fn(&Vec2) -> Mat2 + Send + Sync + 'static,
    {
        self.jac = Some(Arc::new(jac));
        self
    }

    pub fn with_forcing<P>(mut self, phi: P) -> Self
    where
        P: Fn(f64, &Vec2, f64) -> Vec2 + Send + Sync + 'static,
    {
        self.phi = Arc::new(phi);
        self.phi_is_zero = false;
        self
    }

    pub fn with_clock(mut self, clock: ForcingClock) -> Self {
        self.clock = clock;
        self
    }

    /// Phase fractions in `[0, 1)` of the forcing period where φ has kinks.
    pub fn with_kinks(mut self, kinks: Vec<f64>) -> Self {
        self.kinks = kinks.into_iter().map(|k| k.rem_euclid(1.0)).collect();
        self.kinks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        self.kinks.dedup();
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Replaces φ by `φ(t − shift, x, ε)`.
    pub fn shifted_forcing(&self, shift: f64) -> Self {
        let mut out = self.clone();
        let phi = self.phi.clone();
        out.phi = Arc::new(move |t, x, e| phi(t - shift, x, e));
        out
    }

    /// Fixes the forcing period to the cycle period `T`.
    pub fn bind_period(&self, period: f64) -> Self {
        let mut out = self.clone();
        out.period = Some(period);
        out.time_scale = match self.clock {
            ForcingClock::Scaled => 2.0 * PI / period,
            ForcingClock::Absolute => 1.0,
        };
        out
    }

    /// The unforced field as a new system (φ ≡ 0).
    pub fn unforced(&self) -> Self {
        let mut out = self.clone();
        out.phi = Arc::new(|_, _, _| Vec2::zeros());
        out.phi_is_zero = true;
        out.kinks.clear();
        out
    }

    /// The field −ψ, used to follow repelling cycles.
    pub fn time_reversed(&self) -> Self {
        let mut out = self.unforced();
        let psi = self.psi.clone();
        out.psi = Arc::new(move |x| -psi(x));
        if let Some(j) = self.jac.clone() {
            out.jac = Some(Arc::new(move |x| -j(x)));
        }
        out.name = format!("{} (reversed)", self.name);
        out
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn clock(&self) -> ForcingClock {
        self.clock
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jac.is_some()
    }

    pub fn forcing_is_zero(&self) -> bool {
        self.phi_is_zero
    }

    pub fn psi(&self, x: &Vec2) -> Vec2 {
        (self.psi)(x)
    }

    pub fn jacobian(&self, x: &Vec2) -> Mat2 {
        match &self.jac {
            Some(j) => j(x),
            None => self.fd_jacobian(x),
        }
    }

    /// Central-difference Jacobian with step `1e-6 (1 + ‖x‖)`.
    pub fn fd_jacobian(&self, x: &Vec2) -> Mat2 {
        let h = 1e-6 * (1.0 + x.norm());
        let mut m = Mat2::zeros();
        for j in 0..2 {
            let mut e = Vec2::zeros();
            e[j] = h;
            let d = (self.psi(&(x + e)) - self.psi(&(x - e))) / (2.0 * h);
            m.set_column(j, &d);
        }
        m
    }

    pub fn phi(&self, t: f64, x: &Vec2, eps: f64) -> Vec2 {
        (self.phi)(self.time_scale * t, x, eps)
    }

    /// Right-hand side of the perturbed system.
    pub fn perturbed(&self, t: f64, x: &Vec2, eps: f64) -> Vec2 {
        if eps == 0.0 {
            self.psi(x)
        } else {
            self.psi(x) + self.phi(t, x, eps) * eps
        }
    }

    /// System times in `[a, b]` at which `φ(τ − shift, ·)` has a declared kink.
    /// Requires a bound period; empty otherwise.
    pub fn kink_times(&self, shift: f64, a: f64, b: f64) -> Vec<f64> {
        let Some(p) = self.period else {
            return Vec::new();
        };
        if self.kinks.is_empty() || b <= a {
            return Vec::new();
        }
        let mut out = Vec::new();
        let first = ((a - shift) / p).floor() as i64 - 1;
        let last = ((b - shift) / p).ceil() as i64 + 1;
        for n in first..=last {
            for k in &self.kinks {
                let t = shift + (n as f64 + k) * p;
                if t > a && t < b {
                    out.push(t);
                }
            }
        }
        out.sort_by(|x, y| x.partial_cmp(y).unwrap());
        out
    }

    /// Largest deviation `‖φ(t + T, x) − φ(t, x)‖` over a probe set.
    pub fn forcing_periodicity_defect(&self, probes: &[Vec2], samples: usize) -> Option<f64> {
        let p = self.period?;
        let mut worst: f64 = 0.0;
        for x in probes {
            for k in 0..samples {
                let t = p * k as f64 / samples as f64;
                let d = (self.phi(t + p, x, 0.0) - self.phi(t, x, 0.0)).norm();
                worst = worst.max(d);
            }
        }
        Some(worst)
    }

    // -- built-in instances --------------------------------------------------

    /// Hopf normal form `ṙ = r − r³`, `θ̇ = 1`; its cycle is the unit circle.
    pub fn hopf() -> Self {
        PlanarSystem::new("hopf", |x: &Vec2| {
            let r2 = x.norm_squared();
            Vec2::new(x.x - x.y - x.x * r2, x.x + x.y - x.y * r2)
        })
        .with_jacobian(|x: &Vec2| {
            let (a, b) = (x.x, x.y);
            Mat2::new(
                1.0 - 3.0 * a * a - b * b,
                -1.0 - 2.0 * a * b,
                1.0 - 2.0 * a * b,
                1.0 - a * a - 3.0 * b * b,
            )
        })
    }

    /// Hopf normal form forced by the rotating vector `(cos t, sin t)`.
    pub fn hopf_rot() -> Self {
        PlanarSystem::hopf()
            .with_forcing(|t, _x, _e| Vec2::new(t.cos(), t.sin()))
            .with_name("hopf_rot")
    }

    /// Van der Pol oscillator, μ = 1, forced by `(0, cos t)` on the scaled clock.
    pub fn vdp() -> Self {
        PlanarSystem::new("vdp", |x: &Vec2| {
            Vec2::new(x.y, (1.0 - x.x * x.x) * x.y - x.x)
        })
        .with_jacobian(|x: &Vec2| Mat2::new(0.0, 1.0, -2.0 * x.x * x.y - 1.0, 1.0 - x.x * x.x))
        .with_forcing(|t, _x, _e| Vec2::new(0.0, t.cos()))
    }

    /// Linear rotation `ẋ = (−x2, x1)`: every orbit is periodic.
    pub fn rotation() -> Self {
        PlanarSystem::new("rotation", |x: &Vec2| Vec2::new(-x.y, x.x))
            .with_jacobian(|_| Mat2::new(0.0, -1.0, 1.0, 0.0))
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "hopf" => Some(Self::hopf()),
            "hopf_rot" => Some(Self::hopf_rot()),
            "vdp" => Some(Self::vdp()),
            "rotation" => Some(Self::rotation()),
            _ => None,
        }
    }

    pub const BUILTINS: [&'static str; 4] = ["hopf", "hopf_rot", "vdp", "rotation"];
}
