//! The bifurcation functions
//!
//! ```text
//! f0(θ)    = ∫_0^T     ⟨z0(τ), φ(τ − θ, x0(τ), 0)⟩ dτ
//! f1(θ, s) = ∫_{s−T}^s ⟨z1(τ), φ(τ − θ, x0(τ), 0)⟩ dτ
//! ```
//!
//! their zeros, condition `f1(θ0, ·) ≠ 0` on a period, and the half-period
//! symmetry flags.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cycle::golden_min;
use crate::floquet::FloquetFrame;
use crate::integrate::{bisect, scan_sign_changes};
use crate::linalg::Vec2;
use crate::model::PlanarSystem;
use crate::quadrature::{self, QuadError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BifurcationError {
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("bifurcation function identically zero (max |f0| = {max_abs:e}); higher-order case out of scope")]
    Degenerate { max_abs: f64 },
    #[error("theta grid must have at least 64 points, got {0}")]
    GridTooSmall(usize),
}

/// Evaluator of `f0` and `f1` for a fixed cycle frame and forcing.
#[derive(Debug, Clone)]
pub struct Bifurcation {
    frame: FloquetFrame,
    system: PlanarSystem,
    phi_scale: f64,
    z0_scale: f64,
    z1_scale: f64,
}

impl Bifurcation {
    /// `system` carries the forcing; its clock is bound to the cycle period.
    pub fn new(frame: &FloquetFrame, system: &PlanarSystem) -> Self {
        let period = frame.period();
        let system = system.bind_period(period);
        let n = 64;
        let mut phi_scale: f64 = 0.0;
        let mut z0_scale: f64 = 0.0;
        let mut z1_scale: f64 = 0.0;
        for i in 0..n {
            let tau = period * i as f64 / n as f64;
            let x = frame.x0(tau);
            z0_scale = z0_scale.max(frame.z0(tau).norm());
            z1_scale = z1_scale.max(frame.z1_periodic(tau).norm());
            for j in 0..n {
                let t = period * (j as f64 + 0.5) / n as f64;
                phi_scale = phi_scale.max(system.phi(t, &x, 0.0).norm());
            }
        }
        Self {
            frame: frame.clone(),
            system,
            phi_scale,
            z0_scale,
            z1_scale,
        }
    }

    pub fn frame(&self) -> &FloquetFrame {
        &self.frame
    }

    pub fn system(&self) -> &PlanarSystem {
        &self.system
    }

    pub fn period(&self) -> f64 {
        self.frame.period()
    }

    /// Magnitude of the `f0` integrand, `T · max‖z0‖ · max‖φ‖`.
    pub fn f0_scale(&self) -> f64 {
        self.period() * self.z0_scale * self.phi_scale
    }

    fn phi_on_cycle(&self, tau: f64, theta: f64) -> Vec2 {
        self.system.phi(tau - theta, &self.frame.x0(tau), 0.0)
    }

    pub fn try_f0(&self, theta: f64) -> Result<f64, QuadError> {
        let period = self.period();
        let breaks = self.system.kink_times(theta, 0.0, period);
        let tol = 1e-13 * (1.0 + self.f0_scale());
        let q = quadrature::integrate(
            |tau| self.frame.z0(tau).dot(&self.phi_on_cycle(tau, theta)),
            0.0,
            period,
            &breaks,
            tol,
        )?;
        Ok(q.value)
    }

    pub fn try_f1(&self, theta: f64, s: f64) -> Result<f64, QuadError> {
        let period = self.period();
        let (a, b) = (s - period, s);
        let lambda = self.frame.exponent();
        // panels short enough that |z1| changes by at most a factor 2
        let mut breaks = self.system.kink_times(theta, a, b);
        if lambda != 0.0 {
            let h = std::f64::consts::LN_2 / lambda.abs();
            let mut t = a + h;
            while t < b {
                breaks.push(t);
                t += h;
            }
        }
        let peak = (-lambda * a).exp().max((-lambda * b).exp());
        let scale = period * self.phi_scale * self.z1_scale * peak;
        let q = quadrature::integrate(
            |tau| self.frame.z1(tau).dot(&self.phi_on_cycle(tau, theta)),
            a,
            b,
            &breaks,
            1e-13 * (1.0 + scale),
        )?;
        Ok(q.value)
    }

    pub fn f0(&self, theta: f64) -> f64 {
        self.try_f0(theta).unwrap_or(f64::NAN)
    }

    pub fn f1(&self, theta: f64, s: f64) -> f64 {
        self.try_f1(theta, s).unwrap_or(f64::NAN)
    }

    /// Isolated zeros of `f0` on `[0, T)` from an `m`-point grid.
    pub fn find_f0_zeros(&self, m: usize) -> Result<ZeroScan, BifurcationError> {
        if m < 64 {
            return Err(BifurcationError::GridTooSmall(m));
        }
        let period = self.period();
        let h = period / m as f64;
        let grid: Vec<f64> = (0..m).map(|k| h * k as f64).collect();
        let values: Vec<f64> = grid
            .par_iter()
            .map(|&t| self.try_f0(t))
            .collect::<Result<_, _>>()?;
        let max_abs = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let scale = 1.0 + self.f0_scale();
        if max_abs < 1e-12 * scale {
            return Err(BifurcationError::Degenerate { max_abs });
        }
        let f_end = self.try_f0(period)?;
        let periodicity_defect = (f_end - values[0]).abs();

        // cyclic grid [−h, 0, …, T − h, T] so zeros at node 0 are seen
        let mut ext = Vec::with_capacity(m + 2);
        ext.push(-h);
        ext.extend(grid.iter().copied());
        ext.push(period);
        let lookup = |t: f64| -> f64 {
            let k = (t / h).round();
            if (t - k * h).abs() <= 1e-12 * h {
                values[(k as i64).rem_euclid(m as i64) as usize]
            } else {
                self.f0(t)
            }
        };
        let mut zeros: Vec<F0Zero> = Vec::new();
        let slope_h = period / (8.0 * m as f64);
        for e in scan_sign_changes(lookup, &ext) {
            let theta = reduce(e.t, period);
            if zeros.iter().any(|z| circ_dist(z.theta, theta, period) < 1e-9 * period) {
                continue;
            }
            let slope = (self.f0(theta + slope_h) - self.f0(theta - slope_h)) / (2.0 * slope_h);
            zeros.push(F0Zero {
                theta,
                value: self.f0(theta),
                slope,
                simple: slope.abs() > 1e-6 * max_abs / period,
            });
        }
        zeros.sort_by(|a, b| a.theta.partial_cmp(&b.theta).unwrap());

        // even-order touches: local minima of |f0| without a sign change
        let mut touches = Vec::new();
        for k in 0..m {
            let (vp, v, vn) = (values[(k + m - 1) % m], values[k], values[(k + 1) % m]);
            if v.abs() <= vp.abs() && v.abs() <= vn.abs() && vp * vn > 0.0 && v * vp >= 0.0 {
                let (t, a) = golden_min(|t| self.f0(t).abs(), grid[k] - h, grid[k] + h, 1e-12 * period);
                if a <= 1e-10 * scale && !zeros.iter().any(|z| circ_dist(z.theta, t, period) < 2.0 * h) {
                    touches.push(reduce(t, period));
                }
            }
        }

        Ok(ZeroScan {
            grid,
            values,
            zeros,
            touches,
            max_abs,
            periodicity_defect,
        })
    }

    /// `min_{t ∈ [0, T]} |f1(θ0, t)|` from a 512-point grid with local
    /// golden-section refinement.
    pub fn check_pr1(&self, theta0: f64) -> Result<Pr1Check, BifurcationError> {
        let period = self.period();
        let n = 512;
        let grid: Vec<f64> = (0..=n).map(|k| period * k as f64 / n as f64).collect();
        let values: Vec<f64> = grid
            .par_iter()
            .map(|&t| self.try_f1(theta0, t))
            .collect::<Result<_, _>>()?;
        let max_abs = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut best = (0.0, f64::INFINITY);
        for (k, v) in values.iter().enumerate() {
            if k + 1 < values.len() && v * values[k + 1] < 0.0 {
                let t = bisect(&|t| self.f1(theta0, t), grid[k], grid[k + 1], *v);
                let a = self.f1(theta0, t).abs();
                if a < best.1 {
                    best = (t, a);
                }
            }
            if v.abs() < best.1 {
                best = (grid[k], v.abs());
            }
        }
        let h = period / n as f64;
        let (a, b) = ((best.0 - h).max(0.0), (best.0 + h).min(period));
        let (t, m) = golden_min(|t| self.f1(theta0, t).abs(), a, b, 1e-12 * period);
        if m < best.1 {
            best = (t, m);
        }
        let normalized = if max_abs > 0.0 { best.1 / max_abs } else { 0.0 };
        Ok(Pr1Check {
            theta0,
            margin: best.1,
            argmin: best.0,
            max_abs,
            normalized,
            holds: normalized > 1e-6,
        })
    }

    /// Half-period antisymmetry of `φ`, `f0` and `f1(·, T)`.
    pub fn check_symmetries(&self, scan: &ZeroScan) -> Result<Symmetry, BifurcationError> {
        let period = self.period();
        let half = 0.5 * period;
        let n = 64;
        let mut probes: Vec<Vec2> = (0..16).map(|k| self.frame.x0(period * k as f64 / 16.0)).collect();
        probes.extend([Vec2::zeros(), Vec2::new(0.5, -0.25), Vec2::new(-1.5, 2.0)]);
        let mut phi_dev: f64 = 0.0;
        for x in &probes {
            for k in 0..n {
                let t = period * k as f64 / n as f64;
                let d = self.system.phi(t, x, 0.0) + self.system.phi(t + half, x, 0.0);
                phi_dev = phi_dev.max(d.norm());
            }
        }
        let phi_tol = 1e-8 * (1.0 + self.phi_scale);

        let m = scan.values.len();
        let mut f0_dev: f64 = 0.0;
        if m % 2 == 0 {
            for k in 0..m / 2 {
                f0_dev = f0_dev.max((scan.values[k] + scan.values[k + m / 2]).abs());
            }
        } else {
            for k in 0..m {
                let t = scan.grid[k];
                f0_dev = f0_dev.max((self.try_f0(t)? + self.try_f0(t + half)?).abs());
            }
        }
        let f0_tol = 1e-8 * (1.0 + scan.max_abs);

        let thetas: Vec<f64> = (0..32).map(|k| half * k as f64 / 32.0).collect();
        let pairs: Vec<(f64, f64)> = thetas
            .par_iter()
            .map(|&t| Ok((self.try_f1(t, period)?, self.try_f1(t + half, period)?)))
            .collect::<Result<_, QuadError>>()?;
        let f1_max = pairs.iter().fold(0.0f64, |a, (x, y)| a.max(x.abs()).max(y.abs()));
        let f1_dev = pairs.iter().fold(0.0f64, |a, (x, y)| a.max((x + y).abs()));
        let f1_tol = 1e-8 * (1.0 + f1_max);

        let antiperiodic = phi_dev <= phi_tol;
        let f0_sym = f0_dev <= f0_tol;
        let f1_sym = f1_dev <= f1_tol;
        let first_half: Vec<&F0Zero> = scan.zeros.iter().filter(|z| z.theta < half - 1e-9 * period).collect();
        let mut unique_simple = None;
        if first_half.len() == 1 && first_half[0].simple && scan.touches.is_empty() {
            unique_simple = Some(first_half[0].theta);
        }
        let pr111 = match unique_simple {
            Some(t0) => {
                let v = self.try_f1(t0, period)?;
                v.abs() > 1e-6 * f1_max.max(1e-300)
            }
            None => false,
        };
        Ok(Symmetry {
            antiperiodic,
            f0_sym,
            f1_sym,
            prop1_applicable: f0_sym && f1_sym && unique_simple.is_some() && pr111,
            phi_deviation: phi_dev,
            f0_deviation: f0_dev,
            f1_deviation: f1_dev,
        })
    }

    /// Zeros, `f1` margins and symmetry flags on an `m`-point grid.
    pub fn profile(&self, m: usize) -> Result<BifurcationProfile, BifurcationError> {
        let scan = self.find_f0_zeros(m)?;
        let pr1 = scan
            .zeros
            .iter()
            .map(|z| self.check_pr1(z.theta))
            .collect::<Result<Vec<_>, _>>()?;
        let symmetry = self.check_symmetries(&scan)?;
        Ok(BifurcationProfile {
            theta_grid: scan.grid,
            f0_values: scan.values,
            zeros: scan.zeros,
            touch_zeros: scan.touches,
            max_abs_f0: scan.max_abs,
            periodicity_defect: scan.periodicity_defect,
            pr1,
            symmetry,
            grid: m,
        })
    }
}

fn reduce(t: f64, period: f64) -> f64 {
    let r = t.rem_euclid(period);
    if period - r < 1e-12 * period {
        0.0
    } else {
        r
    }
}

fn circ_dist(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct F0Zero {
    pub theta: f64,
    pub value: f64,
    pub slope: f64,
    pub simple: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ZeroScan {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub zeros: Vec<F0Zero>,
    /// Zeros without a sign change (even order), reported as degenerate.
    pub touches: Vec<f64>,
    pub max_abs: f64,
    pub periodicity_defect: f64,
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct Pr1Check {
    pub theta0: f64,
    pub margin: f64,
    pub argmin: f64,
    pub max_abs: f64,
    pub normalized: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct Symmetry {
    pub antiperiodic: bool,
    pub f0_sym: bool,
    pub f1_sym: bool,
    pub prop1_applicable: bool,
    pub phi_deviation: f64,
    pub f0_deviation: f64,
    pub f1_deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BifurcationProfile {
    pub theta_grid: Vec<f64>,
    pub f0_values: Vec<f64>,
    pub zeros: Vec<F0Zero>,
    pub touch_zeros: Vec<f64>,
    pub max_abs_f0: f64,
    pub periodicity_defect: f64,
    pub pr1: Vec<Pr1Check>,
    pub symmetry: Symmetry,
    pub grid: usize,
}

impl BifurcationProfile {
    pub fn pr1_all(&self) -> bool {
        !self.pr1.is_empty() && self.pr1.iter().all(|p| p.holds)
    }
}
