//! Monodromy, characteristic multipliers and the eigenfunction frame
//! `ẋ0, y1` (linearized system) and `z0, z1` (adjoint system).
//!
//! Each eigenfunction is propagated on its own, exponentially rescaled so it
//! stays `O(1)`, and in the time direction in which the other mode decays:
//!
//! * `w(t) = e^{−λt} y1(t)` solves `ẇ = (A(t) − λ) w` and is `T`-periodic,
//! * `z0` solves `ż = −A(t)ᵀ z` and is `T`-periodic,
//! * `u(t) = e^{λt} z1(t)` solves `u̇ = (λ − A(t)ᵀ) u` and is `T`-periodic,
//!
//! with `A(t) = ψ'(x0(t))` and `λ = ln ρ / T` taken from the trace integral
//! (Liouville), which is far more accurate than `ln` of a tiny eigenvalue.

use nalgebra::SVector;
use serde::Serialize;
use thiserror::Error;

use crate::cycle::LimitCycle;
use crate::integrate::{integrate, IntegrateError, Settings, Trajectory};
use crate::linalg::{eigenvector, null_vector, perp, split_unit_eigenvalue, Mat2, Vec2};
use crate::model::PlanarSystem;
use crate::quadrature::{self, QuadError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FloquetError {
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("monodromy has complex multipliers (not a hyperbolic cycle)")]
    ComplexMultipliers,
    #[error("nontrivial multiplier {rho} is within 1e-3 of 1: multiplier 1 is not simple")]
    NotHyperbolic { rho: f64 },
    #[error("monodromy is singular")]
    Singular,
}

/// Integrates `Ẏ = A(t) Y`, `Y(0) = I` over one period.
pub fn monodromy(system: &PlanarSystem, cycle: &LimitCycle, tol: f64) -> Result<Mat2, FloquetError> {
    let a = |t: f64| system.jacobian(&cycle.at(t));
    let y0 = SVector::<f64, 4>::from([1.0, 0.0, 0.0, 1.0]);
    let traj = integrate(
        |t, y: &SVector<f64, 4>| {
            let m = a(t) * Mat2::new(y[0], y[2], y[1], y[3]);
            SVector::<f64, 4>::from([m[(0, 0)], m[(1, 0)], m[(0, 1)], m[(1, 1)]])
        },
        y0,
        0.0,
        cycle.period(),
        &Settings::new(tol),
    )?;
    let e = traj.end();
    Ok(Mat2::new(e[0], e[2], e[1], e[3]))
}

/// `∫_0^T div ψ(x0(t)) dt`, the logarithm of the nontrivial multiplier.
pub fn divergence_integral(system: &PlanarSystem, cycle: &LimitCycle) -> Result<f64, QuadError> {
    let t = cycle.period();
    // a difference Jacobian carries ~1e-10 of noise, so the tight target is unreachable
    let rel = if system.has_analytic_jacobian() { 1e-14 } else { 1e-9 };
    let q = quadrature::integrate(|s| system.jacobian(&cycle.at(s)).trace(), 0.0, t, &[], rel * (1.0 + t))?;
    Ok(q.value)
}

#[derive(Debug, Clone)]
pub struct FloquetFrame {
    system: PlanarSystem,
    cycle: LimitCycle,
    monodromy: Mat2,
    trivial: f64,
    rho: f64,
    rho_star: f64,
    log_rho: f64,
    exponent: f64,
    w: Trajectory,
    z0: Trajectory,
    u: Trajectory,
    cy: f64,
    c0: f64,
    c1: f64,
    grid_size: usize,
    tol: f64,
}

/// One row of the sampled frame.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FrameSample {
    pub t: f64,
    pub xdot0: [f64; 2],
    pub y1: [f64; 2],
    pub z0: [f64; 2],
    pub z1: [f64; 2],
}

/// Deviations of the frame from its defining identities.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct FrameDiagnostics {
    /// `max_t ‖(ẋ0 y1)ᵀ(z0 z1) − I‖∞` on the grid, raw.
    pub lemma1_max: f64,
    /// Same with each entry divided by the product of the paired norms.
    pub lemma1_scaled: f64,
    pub lemma1_entries: [f64; 4],
    /// `max_t` of the angle between `y1(t)` and `z0(t)^⊥`.
    pub y1_z0perp_angle: f64,
    pub rho_rho_star_defect: f64,
    pub trivial_residual: f64,
    /// `|det Y(T) − exp ∫ div ψ|`, absolute and relative.
    pub liouville_abs: f64,
    pub liouville_rel: f64,
    /// Relative defects of `y1(T) = ρ y1(0)`, `z0(T) = z0(0)`, `z1(T) = ρ* z1(0)`.
    pub floquet_y1: f64,
    pub floquet_z0: f64,
    pub floquet_z1: f64,
    /// Finite-difference residual of the adjoint equation, relative to `‖A‖‖z‖`.
    pub adjoint_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FloquetSummary {
    pub rho: f64,
    pub rho_star: f64,
    pub trivial_multiplier: f64,
    pub exponent: f64,
    pub monodromy: [[f64; 2]; 2],
    pub grid: usize,
    pub tol: f64,
    pub diagnostics: FrameDiagnostics,
}

fn unit(v: Vec2) -> Vec2 {
    v / v.norm()
}

impl FloquetFrame {
    /// Builds the normalized frame with `grid` sample points on `[0, T)`.
    pub fn build(system: &PlanarSystem, cycle: &LimitCycle, grid: usize, tol: f64) -> Result<Self, FloquetError> {
        let system = system.unforced();
        let period = cycle.period();
        let m = monodromy(&system, cycle, tol)?;
        let (trivial, rho) = split_unit_eigenvalue(&m).ok_or(FloquetError::ComplexMultipliers)?;
        if !((rho - 1.0).abs() > 1e-3) {
            return Err(FloquetError::NotHyperbolic { rho });
        }
        let minv = m.try_inverse().ok_or(FloquetError::Singular)?;
        let (_, rho_star) = split_unit_eigenvalue(&minv.transpose()).ok_or(FloquetError::ComplexMultipliers)?;
        let log_rho = divergence_integral(&system, cycle)?;
        let lambda = log_rho / period;

        let settings = Settings::new(tol);
        let a = |t: f64| system.jacobian(&cycle.at(t));
        let w_rhs = |t: f64, w: &Vec2| a(t) * w - w * lambda;
        let z_rhs = |t: f64, z: &Vec2| -(a(t).transpose() * z);
        let u_rhs = |t: f64, u: &Vec2| u * lambda - a(t).transpose() * u;

        // y1 and z0 are stable backwards for an attracting cycle, z1 forwards
        let attracting = rho < 1.0;
        let (stable_start, stable_end) = if attracting { (period, 0.0) } else { (0.0, period) };

        let two_pass = |rhs: &dyn Fn(f64, &Vec2) -> Vec2, v: Vec2, from: f64, to: f64| -> Result<Trajectory, FloquetError> {
            let first = integrate(|t, y: &Vec2| rhs(t, y), unit(v), from, to, &settings)?;
            let v2 = unit(first.at(to));
            Ok(integrate(|t, y: &Vec2| rhs(t, y), v2, from, to, &settings)?)
        };

        let v = eigenvector(&m, rho);
        let w = two_pass(&w_rhs, v, stable_start, stable_end)?;
        let zv = null_vector(&(m.transpose() - Mat2::identity()));
        let z0 = two_pass(&z_rhs, zv, stable_start, stable_end)?;
        let uv = eigenvector(&minv.transpose(), rho_star);
        let u = two_pass(&u_rhs, uv, stable_end, stable_start)?;

        let xd0 = system.psi(&cycle.at(0.0));
        let w0 = w.at(0.0);
        let mut cy = 1.0 / w0.norm();
        if (w0 * cy).dot(&perp(&xd0)) < 0.0 {
            cy = -cy;
        }
        let c0 = 1.0 / xd0.dot(&z0.at(0.0));
        let c1 = 1.0 / (w0 * cy).dot(&u.at(0.0));

        Ok(Self {
            system,
            cycle: cycle.clone(),
            monodromy: m,
            trivial,
            rho,
            rho_star,
            log_rho,
            exponent: lambda,
            w,
            z0,
            u,
            cy,
            c0,
            c1,
            grid_size: grid,
            tol,
        })
    }

    pub fn cycle(&self) -> &LimitCycle {
        &self.cycle
    }

    pub fn system(&self) -> &PlanarSystem {
        &self.system
    }

    pub fn period(&self) -> f64 {
        self.cycle.period()
    }

    pub fn monodromy(&self) -> Mat2 {
        self.monodromy
    }

    /// Nontrivial multiplier of the linearized system (monodromy eigenvalue).
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Nontrivial multiplier of the adjoint system, from `(Y(T)⁻¹)ᵀ`.
    pub fn rho_star(&self) -> f64 {
        self.rho_star
    }

    pub fn trivial_multiplier(&self) -> f64 {
        self.trivial
    }

    /// `λ = (1/T) ∫_0^T div ψ(x0)`; `y1` grows like `e^{λt}`, `z1` like `e^{−λt}`.
    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn log_rho(&self) -> f64 {
        self.log_rho
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn grid(&self) -> Vec<f64> {
        let n = self.grid_size;
        (0..n).map(|k| self.period() * k as f64 / n as f64).collect()
    }

    pub fn x0(&self, t: f64) -> Vec2 {
        self.cycle.at(t)
    }

    pub fn xdot0(&self, t: f64) -> Vec2 {
        self.system.psi(&self.cycle.at(t))
    }

    pub fn y1(&self, t: f64) -> Vec2 {
        self.w.at(self.cycle.reduce(t)) * (self.cy * (self.exponent * t).exp())
    }

    pub fn z0(&self, t: f64) -> Vec2 {
        self.z0.at(self.cycle.reduce(t)) * self.c0
    }

    pub fn z1(&self, t: f64) -> Vec2 {
        self.u.at(self.cycle.reduce(t)) * (self.c1 * (-self.exponent * t).exp())
    }

    /// `e^{−λt} y1(t)`, which is `T`-periodic.
    pub fn y1_periodic(&self, t: f64) -> Vec2 {
        self.w.at(self.cycle.reduce(t)) * self.cy
    }

    /// `e^{λt} z1(t)`, which is `T`-periodic.
    pub fn z1_periodic(&self, t: f64) -> Vec2 {
        self.u.at(self.cycle.reduce(t)) * self.c1
    }

    pub fn samples(&self) -> Vec<FrameSample> {
        let arr = |v: Vec2| [v.x, v.y];
        self.grid()
            .into_iter()
            .map(|t| FrameSample {
                t,
                xdot0: arr(self.xdot0(t)),
                y1: arr(self.y1(t)),
                z0: arr(self.z0(t)),
                z1: arr(self.z1(t)),
            })
            .collect()
    }

    /// `(ẋ0 y1)ᵀ (z0 z1)` at `t`, row-major.
    pub fn lemma1_matrix(&self, t: f64) -> [f64; 4] {
        let (xd, y, z0, z1) = (self.xdot0(t), self.y1(t), self.z0(t), self.z1(t));
        [xd.dot(&z0), xd.dot(&z1), y.dot(&z0), y.dot(&z1)]
    }

    pub fn diagnostics(&self) -> FrameDiagnostics {
        let period = self.period();
        let mut lemma1_max: f64 = 0.0;
        let mut lemma1_scaled: f64 = 0.0;
        let mut entries = [0.0f64; 4];
        let mut angle: f64 = 0.0;
        let mut adj: f64 = 0.0;
        let h = period * 1e-5;
        for t in self.grid() {
            let (xd, y, z0, z1) = (self.xdot0(t), self.y1(t), self.z0(t), self.z1(t));
            let p = self.lemma1_matrix(t);
            let d = [p[0] - 1.0, p[1], p[2], p[3] - 1.0];
            let norms = [
                xd.norm() * z0.norm(),
                xd.norm() * z1.norm(),
                y.norm() * z0.norm(),
                y.norm() * z1.norm(),
            ];
            for i in 0..4 {
                entries[i] = entries[i].max(d[i].abs());
                lemma1_max = lemma1_max.max(d[i].abs());
                lemma1_scaled = lemma1_scaled.max(d[i].abs() / norms[i].max(1.0));
            }
            angle = angle.max((y.dot(&z0) / (y.norm() * z0.norm())).abs().asin());
            let (lo, hi) = if t < h { (t, t + 2.0 * h) } else { (t - h, t + h) };
            let a = self.system.jacobian(&self.x0(0.5 * (lo + hi)));
            let scale = a.norm() + self.exponent.abs();
            let zm = 0.5 * (self.z0(lo) + self.z0(hi));
            let r0 = (self.z0(hi) - self.z0(lo)) / (hi - lo) + a.transpose() * zm;
            // the periodic factor of z1 obeys u̇ = (λ − Aᵀ) u
            let um = 0.5 * (self.z1_periodic(lo) + self.z1_periodic(hi));
            let r1 = (self.z1_periodic(hi) - self.z1_periodic(lo)) / (hi - lo) + a.transpose() * um - um * self.exponent;
            adj = adj.max(r0.norm() / (scale * z0.norm())).max(r1.norm() / (scale * um.norm()));
        }
        let det = self.monodromy.determinant();
        let lv = self.log_rho.exp();
        let y1_0 = self.y1(0.0);
        let y1_t = self.w.at(period) * (self.cy * (self.exponent * period).exp());
        let z0_0 = self.z0(0.0);
        let z0_t = self.z0.at(period) * self.c0;
        let z1_0 = self.z1(0.0);
        let z1_t = self.u.at(period) * (self.c1 * (-self.exponent * period).exp());
        FrameDiagnostics {
            lemma1_max,
            lemma1_scaled,
            lemma1_entries: entries,
            y1_z0perp_angle: angle,
            rho_rho_star_defect: (self.rho * self.rho_star - 1.0).abs(),
            trivial_residual: (self.trivial - 1.0).abs(),
            liouville_abs: (det - lv).abs(),
            liouville_rel: ((det - lv) / lv).abs(),
            floquet_y1: (y1_t - y1_0 * self.rho).norm() / (y1_0 * self.rho).norm(),
            floquet_z0: (z0_t - z0_0).norm() / z0_0.norm(),
            floquet_z1: (z1_t - z1_0 * self.rho_star).norm() / (z1_0 * self.rho_star).norm(),
            adjoint_residual: adj,
        }
    }

    pub fn summary(&self) -> FloquetSummary {
        let m = self.monodromy;
        FloquetSummary {
            rho: self.rho,
            rho_star: self.rho_star,
            trivial_multiplier: self.trivial,
            exponent: self.exponent,
            monodromy: [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]],
            grid: self.grid_size,
            tol: self.tol,
            diagnostics: self.diagnostics(),
        }
    }
}

/// Result of the long-time adjoint extraction of `z0`.
#[derive(Debug, Clone, Serialize)]
pub struct LongtimeExtract {
    pub periods: usize,
    pub scale: f64,
    /// `max_t ‖c ẑ(t) − z0(t)‖` on the frame grid with the optimal scalar `c`.
    pub deviation: f64,
    pub curve: Vec<[f64; 2]>,
}

/// Recovers `z0` by integrating the adjoint system over `k` periods from `ξ`
/// (default: a vector with both `z0` and `z1` components) and keeping the last
/// period, in the time direction in which the `z1` mode decays.
pub fn longtime_adjoint_extract(frame: &FloquetFrame, k: usize, xi: Option<Vec2>) -> Result<LongtimeExtract, FloquetError> {
    let period = frame.period();
    let decay = frame.rho_star().min(1.0 / frame.rho_star()).abs();
    let cap = if decay > 0.0 && decay < 1.0 {
        ((-300.0) / decay.log10()).floor().max(1.0) as usize
    } else {
        k
    };
    let k = k.clamp(1, cap.max(1));
    let xd = frame.xdot0(0.0);
    let xi = xi.unwrap_or(xd / xd.norm_squared() + perp(&xd) / xd.norm());
    let sys = frame.system();
    let rhs = |t: f64, z: &Vec2| -(sys.jacobian(&frame.x0(t)).transpose() * z);
    let settings = Settings::new(frame.tol());
    let kt = k as f64 * period;
    let growing = frame.rho_star() > 1.0;
    let traj = if growing {
        integrate(rhs, xi, 0.0, -kt, &settings)?
    } else {
        integrate(rhs, xi, 0.0, kt, &settings)?
    };
    let offset = if growing { -kt } else { kt - period };
    let grid = frame.grid();
    let zhat: Vec<Vec2> = grid.iter().map(|&t| traj.at(t + offset)).collect();
    let exact: Vec<Vec2> = grid.iter().map(|&t| frame.z0(t)).collect();
    let num: f64 = zhat.iter().zip(&exact).map(|(a, b)| a.dot(b)).sum();
    let den: f64 = zhat.iter().map(|a| a.norm_squared()).sum();
    let c = num / den;
    let deviation = zhat
        .iter()
        .zip(&exact)
        .map(|(a, b)| (a * c - b).norm())
        .fold(0.0, f64::max);
    Ok(LongtimeExtract {
        periods: k,
        scale: c,
        deviation,
        curve: zhat.iter().map(|v| [v.x * c, v.y * c]).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycle::find_limit_cycle;
    use std::f64::consts::PI;

    fn frame(sys: &PlanarSystem, seed: Vec2) -> FloquetFrame {
        let c = find_limit_cycle(sys, seed, None, 1e-13).unwrap();
        FloquetFrame::build(sys, &c, 1024, 1e-13).unwrap()
    }

    fn hopf_frame() -> FloquetFrame {
        frame(&PlanarSystem::hopf(), Vec2::new(1.3, 0.0))
    }

    #[test]
    fn hopf_multipliers() {
        let f = hopf_frame();
        let rho = (-4.0 * PI).exp();
        assert!((f.rho() / rho - 1.0).abs() < 1e-9);
        assert!((f.rho_star() * rho - 1.0).abs() < 1e-9);
        assert!((f.exponent() + 2.0).abs() < 1e-10);
        assert!((f.trivial_multiplier() - 1.0).abs() < 1e-7);
        let d = f.diagnostics();
        assert!(d.liouville_rel < 1e-8, "{d:?}");
        assert!(d.rho_rho_star_defect < 1e-9);
    }

    #[test]
    fn hopf_frame_closed_forms() {
        let f = hopf_frame();
        let mut worst = [0.0f64; 4];
        for t in f.grid() {
            let (c, s) = (t.cos(), t.sin());
            let er = Vec2::new(c, s);
            let et = Vec2::new(-s, c);
            worst[0] = worst[0].max((f.xdot0(t) - et).norm());
            worst[1] = worst[1].max((f.y1(t) - er * (-2.0 * t).exp()).norm());
            worst[2] = worst[2].max((f.z0(t) - et).norm());
            worst[3] = worst[3].max((f.z1(t) - er * (2.0 * t).exp()).norm() * (-2.0 * t).exp());
        }
        assert!(worst.iter().all(|&w| w < 1e-6), "{worst:?}");
    }

    #[test]
    fn hopf_biorthogonality_and_floquet_relations() {
        let f = hopf_frame();
        let d = f.diagnostics();
        assert!(d.lemma1_max < 1e-7, "{d:?}");
        assert!(d.y1_z0perp_angle < 1e-8);
        assert!(d.floquet_y1 < 1e-7 && d.floquet_z0 < 1e-7 && d.floquet_z1 < 1e-7, "{d:?}");
        assert!(d.adjoint_residual < 1e-6);
        // identity at an off-grid time too
        let m = f.lemma1_matrix(1.234567);
        assert!((m[0] - 1.0).abs() < 1e-7 && m[1].abs() < 1e-7 && m[2].abs() < 1e-7 && (m[3] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn vdp_frame() {
        let f = frame(&PlanarSystem::vdp(), Vec2::new(2.0, 0.0));
        assert!((f.period() - 6.663286859).abs() < 1e-8);
        assert!(f.rho() > 0.0 && f.rho() < 1e-3);
        assert!((f.rho() * f.rho_star() - 1.0).abs() < 1e-8);
        let d = f.diagnostics();
        assert!(d.lemma1_max < 1e-7, "{d:?}");
        assert!(d.y1_z0perp_angle < 1e-8);
    }

    #[test]
    fn repelling_cycle_frame() {
        let sys = PlanarSystem::hopf().time_reversed();
        let f = frame(&sys, Vec2::new(1.3, 0.0));
        let rho = (4.0 * PI).exp();
        assert!((f.rho() / rho - 1.0).abs() < 1e-9);
        assert!(!f.cycle().is_attracting());
        assert!(f.diagnostics().lemma1_max < 1e-7);
    }

    #[test]
    fn longtime_extraction_converges() {
        let f = hopf_frame();
        let e2 = longtime_adjoint_extract(&f, 2, None).unwrap();
        let e3 = longtime_adjoint_extract(&f, 3, None).unwrap();
        assert!(e3.deviation < 1e-4);
        let ratio = e3.deviation / e2.deviation;
        assert!((ratio / (-4.0 * PI).exp()).ln().abs() < 1.0, "{ratio}");
        let exact = longtime_adjoint_extract(&f, 1, Some(f.z0(0.0))).unwrap();
        assert!(exact.deviation < 1e-10);
        assert!((exact.scale - 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_jacobian_monodromy_is_identity() {
        let sys = PlanarSystem::hopf();
        let c = find_limit_cycle(&sys, Vec2::new(1.3, 0.0), None, 1e-12).unwrap();
        let flat = sys.clone().with_jacobian(|_| Mat2::zeros());
        let m = monodromy(&flat, &c, 1e-12).unwrap();
        assert!((m - Mat2::identity()).amax() < 1e-14);
        let d = divergence_integral(&sys, &c).unwrap();
        assert!((d + 4.0 * PI).abs() < 1e-10);
    }
}
