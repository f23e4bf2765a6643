//! `T`-periodic solutions of the perturbed system `ẋ = ψ(x) + εφ(t, x, ε)`
//! as fixed points of the time-`T` map, their position relative to the
//! cycle, their phase, and their distance to the cycle through the sections
//! `{⟨z0(t), x − x0(t)⟩ = 0}`.

use nalgebra::SVD;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bifurcation::{Bifurcation, BifurcationError, BifurcationProfile};
use crate::cycle::{golden_min, Membership};
use crate::integrate::{flow, scan_sign_changes, IntegrateError, Settings, Trajectory, MIN_TOL};
use crate::linalg::{perp, Mat2, Vec2};
use crate::model::PlanarSystem;
use crate::quadrature::QuadError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PersistError {
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Bifurcation(#[from] BifurcationError),
    #[error("Newton iteration stalled at residual {residual:e} after {iterations} steps")]
    NoConvergence { residual: f64, iterations: usize },
    #[error("estimated phase {theta_hat} matches no zero of f0 (nearest {theta0})")]
    PhaseMismatch { theta_hat: f64, theta0: f64 },
    #[error("epsilon must be finite and non-negative, got {0}")]
    BadEpsilon(f64),
    #[error("no zero of f1(theta0, .) on the period at theta0 = {theta0} (normalized margin {margin:e})")]
    NoF1Zero { theta0: f64, margin: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum Location {
    Outside,
    Straddles,
    Inside,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SectionMode {
    Linearized,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PersistOptions {
    pub tol: f64,
    /// Number of `t` values of the distance profile.
    pub profile_grid: usize,
    pub sections: SectionMode,
    pub max_newton: usize,
    /// Broyden updates instead of a fresh difference Jacobian per step.
    /// `None` picks Broyden when the forcing declares kinks.
    pub broyden: Option<bool>,
}

impl Default for PersistOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            profile_grid: 128,
            sections: SectionMode::Linearized,
            max_newton: 40,
            broyden: None,
        }
    }
}

fn settings(system: &PlanarSystem, period: f64, tol: f64) -> Settings {
    Settings::new(tol.max(MIN_TOL)).with_breakpoints(system.kink_times(0.0, 0.0, period))
}

fn perturbed_orbit(system: &PlanarSystem, xi: Vec2, eps: f64, period: f64, tol: f64) -> Result<Trajectory, IntegrateError> {
    flow(|t, x| system.perturbed(t, x, eps), xi, 0.0, period, &settings(system, period, tol))
}

fn time_t_map(system: &PlanarSystem, xi: Vec2, eps: f64, period: f64, tol: f64) -> Result<Vec2, IntegrateError> {
    Ok(perturbed_orbit(system, xi, eps, period, tol)?.end())
}

fn fd_jacobian(system: &PlanarSystem, xi: Vec2, eps: f64, period: f64, tol: f64) -> Result<Mat2, IntegrateError> {
    let h = 1e-6 * (1.0 + xi.norm());
    let mut m = Mat2::zeros();
    for j in 0..2 {
        let mut e = Vec2::zeros();
        e[j] = h;
        let d = (time_t_map(system, xi + e, eps, period, tol)? - time_t_map(system, xi - e, eps, period, tol)?) / (2.0 * h);
        m.set_column(j, &d);
    }
    Ok(m)
}

/// `P(ξ)`, the state at time `T` of the perturbed system from `x(0) = ξ`,
/// with its central-difference Jacobian.
pub fn poincare_map(system: &PlanarSystem, xi: Vec2, eps: f64, period: f64, tol: f64) -> Result<(Vec2, Mat2), IntegrateError> {
    let system = system.bind_period(period);
    Ok((
        time_t_map(&system, xi, eps, period, tol)?,
        fd_jacobian(&system, xi, eps, period, tol)?,
    ))
}

fn solve(a: &Mat2, b: &Vec2) -> Option<Vec2> {
    let svd = SVD::new(*a, true, true);
    let cutoff = 1e-10 * svd.singular_values.max();
    svd.solve(b, cutoff).ok()
}

#[derive(Debug, Clone)]
struct Converged {
    xi: Vec2,
    residual: f64,
    history: Vec<f64>,
}

fn newton(system: &PlanarSystem, seed: Vec2, eps: f64, period: f64, opts: &PersistOptions, broyden: bool) -> Result<Converged, (PersistError, Vec<f64>)> {
    let tol = opts.tol;
    let g = |x: Vec2| time_t_map(system, x, eps, period, tol).map(|p| p - x);
    let mut x = seed;
    let mut gx = g(x).map_err(|e| (e.into(), vec![]))?;
    let mut history = vec![gx.norm()];
    let mut jac: Option<Mat2> = None;
    for it in 0..opts.max_newton {
        let target = 1e-11 * (1.0 + x.norm());
        if gx.norm() <= target {
            return Ok(Converged { xi: x, residual: gx.norm(), history });
        }
        let j = match (broyden, jac) {
            (true, Some(j)) => j,
            _ => fd_jacobian(system, x, eps, period, tol).map_err(|e| (e.into(), history.clone()))? - Mat2::identity(),
        };
        let Some(dx) = solve(&j, &(-gx)) else {
            return Err((
                PersistError::NoConvergence { residual: gx.norm(), iterations: it },
                history,
            ));
        };
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..12 {
            let xn = x + dx * lambda;
            if let Ok(gn) = g(xn) {
                if gn.norm() < gx.norm() || gn.norm() <= target {
                    accepted = Some((xn, gn));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((xn, gn)) = accepted else {
            return Err((
                PersistError::NoConvergence { residual: gx.norm(), iterations: it },
                history,
            ));
        };
        if broyden {
            let s = xn - x;
            let y = gn - gx;
            jac = Some(j + (y - j * s) * s.transpose() / s.norm_squared());
        }
        x = xn;
        gx = gn;
        history.push(gx.norm());
    }
    let residual = gx.norm();
    if residual <= 1e-10 * (1.0 + x.norm()) {
        return Ok(Converged { xi: x, residual, history });
    }
    Err((
        PersistError::NoConvergence { residual, iterations: opts.max_newton },
        history,
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedReport {
    pub theta0: f64,
    pub seed: [f64; 2],
    pub converged: bool,
    pub residual_history: Vec<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct ProfilePoint {
    pub t: f64,
    /// Crossing time `sε(t) = t − θε(t)`.
    pub s: f64,
    pub dist: f64,
    /// `ε |f1(θ0, t)| ‖y1(t)‖ / |1 − ρ|`.
    pub predicted: f64,
    /// `dist / (ε |f1(θ0, t)|)`.
    pub ratio: f64,
    /// Section coordinate of the pulled-back crossing (exact sections only).
    pub r: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DistanceProfile {
    pub mode: SectionMode,
    pub theta0: f64,
    pub points: Vec<ProfilePoint>,
    /// `(t, reason)` for grid times without a crossing.
    pub failures: Vec<(f64, String)>,
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// `max_t |dist(t) − predicted(t)|`.
    pub prediction_error: f64,
    /// `max_t |sε(t) − (t − θ0)|` (circular).
    pub phase_drift: f64,
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct Corollary2 {
    pub min_distance: f64,
    pub threshold: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PeriodicSolution {
    pub eps: f64,
    pub start: [f64; 2],
    pub fixed_point_residual: f64,
    pub location: Location,
    pub phase: f64,
    pub theta0: Option<f64>,
    pub profile: Option<DistanceProfile>,
    pub corollary2: Option<Corollary2>,
    /// Largest distance of the orbit from the cycle.
    pub max_offset: f64,
    #[serde(skip)]
    pub orbit: Trajectory,
}

impl PeriodicSolution {
    pub fn at(&self, t: f64) -> Vec2 {
        let p = self.orbit.t1();
        self.orbit.at(t.rem_euclid(p).min(p))
    }

    pub fn samples(&self, n: usize) -> Vec<Vec2> {
        let p = self.orbit.t1();
        (0..n).map(|k| self.orbit.at(p * k as f64 / n as f64)).collect()
    }
}

fn circ_dist(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

/// `sup_t ‖a(t)‖ · |f1(θ0, t)| ‖y1(t)‖ / |1 − ρ|` on a 64-point grid.
fn displacement_scale(bif: &Bifurcation, theta0: f64) -> Result<f64, QuadError> {
    let frame = bif.frame();
    let period = bif.period();
    let mut m: f64 = 0.0;
    for k in 0..64 {
        let t = period * k as f64 / 64.0;
        m = m.max(bif.try_f1(theta0, t)?.abs() * frame.y1(t).norm());
    }
    Ok(m / (1.0 - frame.rho()).abs())
}

/// Location by majority-free vote of `cycle.membership` on 256 samples, and
/// the phase `θ̂ = argmin_θ Σ_t ‖xε(t − θ) − x0(t)‖²`.
pub fn classify_and_phase(orbit: &Trajectory, bif: &Bifurcation) -> (Location, f64) {
    let frame = bif.frame();
    let cycle = frame.cycle();
    let period = bif.period();
    let n = 256;
    let at = |t: f64| orbit.at(t.rem_euclid(period).min(period));
    let mut inside = 0;
    let mut outside = 0;
    for k in 0..n {
        match cycle.membership(&at(period * k as f64 / n as f64)) {
            Membership::Inside => inside += 1,
            Membership::Outside => outside += 1,
            Membership::OnBoundary => {}
        }
    }
    let location = if inside == n {
        Location::Inside
    } else if outside == n {
        Location::Outside
    } else {
        Location::Straddles
    };
    let ts: Vec<f64> = (0..n).map(|k| period * k as f64 / n as f64).collect();
    let x0: Vec<Vec2> = ts.iter().map(|&t| frame.x0(t)).collect();
    let cost = |theta: f64| -> f64 {
        ts.iter().zip(&x0).map(|(&t, x)| (at(t - theta) - x).norm_squared()).sum::<f64>() / n as f64
    };
    let mut best = (0.0, f64::INFINITY);
    for &t in &ts {
        let c = cost(t);
        if c < best.1 {
            best = (t, c);
        }
    }
    let h = period / n as f64;
    let (theta, _) = golden_min(cost, best.0 - h, best.0 + h, 1e-7);
    let theta = theta.rem_euclid(period);
    // below the golden-section resolution T and 0 are the same phase
    let theta = if period - theta < 1e-6 { 0.0 } else { theta };
    (location, theta)
}

/// Crossing of the solution with the line `⟨z0(t), x − x0(t)⟩ = 0` nearest
/// `center`, searched in `[center − T/2, center + T/2]`.
fn linear_crossing(sol: &impl Fn(f64) -> Vec2, z0: Vec2, x0: Vec2, center: f64, period: f64) -> Option<f64> {
    let g = |s: f64| z0.dot(&(sol(s) - x0));
    let grid: Vec<f64> = (0..=64).map(|k| center - 0.5 * period + period * k as f64 / 64.0).collect();
    scan_sign_changes(g, &grid)
        .into_iter()
        .map(|e| e.t)
        .min_by(|a, b| (a - center).abs().partial_cmp(&(b - center).abs()).unwrap())
}

/// Crossing with the flowed section `I(t, ·) = Ω(T, 0, h(t, ·))`, found by
/// pulling the solution back through the unperturbed flow over one period.
fn exact_crossing(
    sol: &(impl Fn(f64) -> Vec2 + Sync),
    unforced: &PlanarSystem,
    z0: Vec2,
    x0: Vec2,
    guess: f64,
    period: f64,
    tol: f64,
) -> Result<(f64, f64), String> {
    let settings = Settings::new(tol.max(MIN_TOL));
    let pull = |s: f64| flow(|_, x| unforced.psi(x), sol(s), period, 0.0, &settings).map(|tr| tr.end());
    let g = |s: f64| pull(s).map(|p| z0.dot(&(p - x0))).unwrap_or(f64::NAN);
    let w = period / 16.0;
    let grid: Vec<f64> = (0..=16).map(|k| guess - w + 2.0 * w * k as f64 / 16.0).collect();
    let hit = scan_sign_changes(g, &grid)
        .into_iter()
        .map(|e| e.t)
        .min_by(|a, b| (a - guess).abs().partial_cmp(&(b - guess).abs()).unwrap())
        .ok_or_else(|| "no crossing with the flowed section (pull-back leaves the domain or misses the section)".to_string())?;
    let p = pull(hit).map_err(|e| e.to_string())?;
    let dir = perp(&z0).normalize();
    let r = dir.dot(&(p - x0));
    if r.abs() > 1.0 {
        return Err(format!("crossing at section coordinate r = {r:.4} beyond r0 = 1"));
    }
    Ok((hit, r))
}

/// Distance profile through the sections at `m` grid times.
pub fn theorem1_profile(
    sol: &PeriodicSolution,
    bif: &Bifurcation,
    theta0: f64,
    opts: &PersistOptions,
) -> Result<DistanceProfile, PersistError> {
    let frame = bif.frame();
    let period = bif.period();
    if circ_dist(sol.phase, theta0, period) >= period / 8.0 {
        return Err(PersistError::PhaseMismatch { theta_hat: sol.phase, theta0 });
    }
    let eps = sol.eps;
    let one_minus_rho = (1.0 - frame.rho()).abs();
    let unforced = bif.system().unforced();
    let at = |s: f64| sol.at(s);
    let m = opts.profile_grid.max(8);
    let rows: Vec<Result<ProfilePoint, (f64, String)>> = (0..m)
        .into_par_iter()
        .map(|k| {
            let t = period * k as f64 / m as f64;
            let (z0, x0) = (frame.z0(t), frame.x0(t));
            let center = t - sol.phase;
            let s_lin = linear_crossing(&at, z0, x0, center, period).ok_or((t, "no crossing in window".to_string()))?;
            let (s, r) = match opts.sections {
                SectionMode::Linearized => (s_lin, None),
                SectionMode::Exact => {
                    let (s, r) = exact_crossing(&at, &unforced, z0, x0, s_lin, period, opts.tol).map_err(|e| (t, e))?;
                    (s, Some(r))
                }
            };
            let f1 = bif.try_f1(theta0, t).map_err(|e| (t, e.to_string()))?;
            let dist = (at(s) - x0).norm();
            Ok(ProfilePoint {
                t,
                s,
                dist,
                predicted: eps * f1.abs() * frame.y1(t).norm() / one_minus_rho,
                ratio: dist / (eps * f1.abs()),
                r,
            })
        })
        .collect();
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for r in rows {
        match r {
            Ok(p) => points.push(p),
            Err(f) => failures.push(f),
        }
    }
    let ratio_min = points.iter().fold(f64::INFINITY, |a, p| a.min(p.ratio));
    let ratio_max = points.iter().fold(0.0f64, |a, p| a.max(p.ratio));
    let prediction_error = points.iter().fold(0.0f64, |a, p| a.max((p.dist - p.predicted).abs()));
    let phase_drift = points
        .iter()
        .fold(0.0f64, |a, p| a.max(circ_dist(p.s, p.t - theta0, period)));
    Ok(DistanceProfile {
        mode: opts.sections,
        theta0,
        points,
        failures,
        ratio_min,
        ratio_max,
        prediction_error,
        phase_drift,
    })
}

/// `min_{s,t} ‖xε(s) − x0(t)‖` from 256 samples of the solution, each
/// measured against the refined cycle distance, then refined in `s`.
pub fn corollary2_check(sol: &PeriodicSolution, bif: &Bifurcation, pr1_normalized: f64) -> Corollary2 {
    let cycle = bif.frame().cycle();
    let period = bif.period();
    let n = 256;
    let d = |s: f64| cycle.distance(&sol.at(s));
    let mut best = (0.0, f64::INFINITY);
    for k in 0..n {
        let s = period * k as f64 / n as f64;
        let v = d(s);
        if v < best.1 {
            best = (s, v);
        }
    }
    let h = period / n as f64;
    let (_, min_distance) = golden_min(d, best.0 - h, best.0 + h, 1e-9 * period);
    let min_distance = min_distance.min(best.1);
    let threshold = sol.eps * pr1_normalized / 4.0;
    Corollary2 {
        min_distance,
        threshold,
        holds: min_distance > threshold,
    }
}

/// Smallest distance between the two orbits, from 512 samples of each with
/// local refinement.
pub fn orbit_separation(a: &PeriodicSolution, b: &PeriodicSolution) -> f64 {
    let n = 512;
    let pa = a.samples(n);
    let pb = b.samples(n);
    let period = a.orbit.t1();
    let h = period / n as f64;
    let mut best = (0, 0, f64::INFINITY);
    for (i, x) in pa.iter().enumerate() {
        for (j, y) in pb.iter().enumerate() {
            let d = (x - y).norm_squared();
            if d < best.2 {
                best = (i, j, d);
            }
        }
    }
    let (i, j) = (best.0 as f64 * h, best.1 as f64 * h);
    let mut s = i;
    let mut t = j;
    for _ in 0..4 {
        s = golden_min(|s| (a.at(s) - b.at(t)).norm(), s - h, s + h, 1e-10).0;
        t = golden_min(|t| (a.at(s) - b.at(t)).norm(), t - h, t + h, 1e-10).0;
    }
    (a.at(s) - b.at(t)).norm().min(best.2.sqrt())
}

/// Fixed points of the time-`T` map near `x0(θ0)` for every zero `θ0` of
/// `f0`, each classified, phased and profiled.
pub fn find_periodic_solutions(
    bif: &Bifurcation,
    profile: &BifurcationProfile,
    eps: f64,
    opts: &PersistOptions,
) -> Result<(Vec<PeriodicSolution>, Vec<SeedReport>), PersistError> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(PersistError::BadEpsilon(eps));
    }
    let frame = bif.frame();
    let period = bif.period();
    let system = bif.system();
    let broyden = opts.broyden.unwrap_or(!system.kinks().is_empty());
    let rho = frame.rho();

    let mut seeds: Vec<(f64, Vec2, f64)> = Vec::new();
    for z in &profile.zeros {
        let theta0 = z.theta;
        let x0 = frame.x0(theta0);
        let y1 = frame.y1(theta0);
        let scale = displacement_scale(bif, theta0)?;
        let r0 = (10.0 * eps * scale).clamp(1e-9, 1.0);
        let a = bif.try_f1(theta0, theta0)? / (1.0 - rho);
        seeds.push((theta0, x0 + y1 * (eps * a), r0));
        let n = y1.normalize();
        for delta in [eps, 2.0 * eps * scale] {
            seeds.push((theta0, x0 + n * delta, r0));
            seeds.push((theta0, x0 - n * delta, r0));
        }
    }
    let outcomes: Vec<_> = seeds
        .par_iter()
        .map(|&(theta0, seed, r0)| (theta0, seed, r0, newton(system, seed, eps, period, opts, broyden)))
        .collect();

    let cycle = frame.cycle();
    let mut reports = Vec::new();
    let mut solutions: Vec<PeriodicSolution> = Vec::new();
    for (theta0, seed, r0, out) in outcomes {
        let mut report = SeedReport {
            theta0,
            seed: [seed.x, seed.y],
            converged: false,
            residual_history: Vec::new(),
            note: None,
        };
        match out {
            Err((e, history)) => {
                report.residual_history = history;
                report.note = Some(e.to_string());
            }
            Ok(c) => {
                report.residual_history = c.history.clone();
                report.converged = true;
                let orbit = perturbed_orbit(system, c.xi, eps, period, opts.tol)?;
                let max_offset = (0..256)
                    .map(|k| cycle.distance(&orbit.at(period * k as f64 / 256.0)))
                    .fold(0.0, f64::max);
                if max_offset > r0 {
                    report.note = Some(format!("discarded: orbit leaves the {r0:.3e} band around the cycle"));
                } else if solutions.iter().any(|s| is_same_orbit(s, &c.xi)) {
                    report.note = Some("duplicate".into());
                } else {
                    let (location, phase) = classify_and_phase(&orbit, bif);
                    solutions.push(PeriodicSolution {
                        eps,
                        start: [c.xi.x, c.xi.y],
                        fixed_point_residual: c.residual,
                        location,
                        phase,
                        theta0: None,
                        profile: None,
                        corollary2: None,
                        max_offset,
                        orbit,
                    });
                }
            }
        }
        reports.push(report);
    }

    for sol in solutions.iter_mut() {
        let nearest = profile
            .zeros
            .iter()
            .min_by(|a, b| {
                circ_dist(a.theta, sol.phase, period)
                    .partial_cmp(&circ_dist(b.theta, sol.phase, period))
                    .unwrap()
            })
            .map(|z| z.theta);
        let Some(theta0) = nearest else { continue };
        if eps == 0.0 || circ_dist(theta0, sol.phase, period) >= period / 8.0 {
            continue;
        }
        sol.theta0 = Some(theta0);
        sol.profile = Some(theorem1_profile(sol, bif, theta0, opts)?);
        if let Some(p) = profile.pr1.iter().find(|p| p.theta0 == theta0) {
            sol.corollary2 = Some(corollary2_check(sol, bif, p.normalized));
        }
    }
    solutions.sort_by(|a, b| {
        a.location
            .cmp(&b.location)
            .then(a.phase.partial_cmp(&b.phase).unwrap())
    });
    Ok((solutions, reports))
}

fn is_same_orbit(sol: &PeriodicSolution, xi: &Vec2) -> bool {
    if (Vec2::new(sol.start[0], sol.start[1]) - xi).norm() <= 1e-6 {
        return true;
    }
    if sol.eps != 0.0 {
        return false;
    }
    // without forcing every point of one closed orbit is a fixed point
    let period = sol.orbit.t1();
    (0..1024).any(|k| (sol.orbit.at(period * k as f64 / 1024.0) - xi).norm() <= 1e-6)
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonResult {
    pub eps: f64,
    pub solutions: Vec<PeriodicSolution>,
    pub seeds: Vec<SeedReport>,
    /// Smallest pairwise orbit separation, absent for fewer than two solutions.
    pub separation: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceFit {
    pub theta0: f64,
    /// `(ε, max_t |dist(t) − predicted(t)|)`.
    pub points: Vec<(f64, f64)>,
    pub slope: Option<f64>,
    /// `(ε, |θ̂ − θ0|)`.
    pub phase_error: Vec<(f64, f64)>,
    /// `(ε, max_t |sε(t) − (t − θ0)|)`.
    pub phase_drift: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PersistenceRun {
    pub eps_grid: Vec<f64>,
    pub results: Vec<EpsilonResult>,
    pub convergence: Vec<ConvergenceFit>,
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Solutions for every `ε` of the grid plus convergence fits per zero of `f0`.
/// Failures at one `ε` are recorded without aborting the others.
pub fn persistence_run(bif: &Bifurcation, profile: &BifurcationProfile, eps_grid: &[f64], opts: &PersistOptions) -> PersistenceRun {
    let period = bif.period();
    let results: Vec<EpsilonResult> = eps_grid
        .iter()
        .map(|&eps| match find_periodic_solutions(bif, profile, eps, opts) {
            Ok((solutions, seeds)) => {
                let mut separation: Option<f64> = None;
                for i in 0..solutions.len() {
                    for j in i + 1..solutions.len() {
                        let d = orbit_separation(&solutions[i], &solutions[j]);
                        separation = Some(separation.map_or(d, |s| s.min(d)));
                    }
                }
                EpsilonResult { eps, solutions, seeds, separation, error: None }
            }
            Err(e) => EpsilonResult {
                eps,
                solutions: Vec::new(),
                seeds: Vec::new(),
                separation: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let convergence = profile
        .zeros
        .iter()
        .map(|z| {
            let mut fit = ConvergenceFit {
                theta0: z.theta,
                points: Vec::new(),
                slope: None,
                phase_error: Vec::new(),
                phase_drift: Vec::new(),
            };
            for r in &results {
                for s in r.solutions.iter().filter(|s| s.theta0 == Some(z.theta)) {
                    if let Some(p) = &s.profile {
                        fit.points.push((r.eps, p.prediction_error));
                        fit.phase_drift.push((r.eps, p.phase_drift));
                    }
                    fit.phase_error.push((r.eps, circ_dist(s.phase, z.theta, period)));
                }
            }
            fit.slope = loglog_slope(&fit.points);
            fit
        })
        .collect();
    PersistenceRun {
        eps_grid: eps_grid.to_vec(),
        results,
        convergence,
    }
}

/// Distance through the section at a zero `t*` of `f1(θ0, ·)`, at `ε` and
/// `ε/2`; it vanishes faster than `ε`.
#[derive(Debug, Clone, Serialize)]
pub struct Corollary1Probe {
    pub theta0: f64,
    pub t_star: f64,
    pub eps: [f64; 2],
    pub dist: [f64; 2],
    pub ratio: f64,
    pub holds: bool,
}

pub fn corollary1_probe(bif: &Bifurcation, profile: &BifurcationProfile, theta0: f64, eps: f64, opts: &PersistOptions) -> Result<Corollary1Probe, PersistError> {
    let frame = bif.frame();
    let period = bif.period();
    let pr1 = bif.check_pr1(theta0)?;
    if pr1.holds {
        return Err(PersistError::NoF1Zero { theta0, margin: pr1.normalized });
    }
    let t_star = pr1.argmin;
    let (z0, x0) = (frame.z0(t_star), frame.x0(t_star));
    let mut dist = [0.0; 2];
    let eps_pair = [eps, 0.5 * eps];
    for (k, &e) in eps_pair.iter().enumerate() {
        let (sols, _) = find_periodic_solutions(bif, profile, e, opts)?;
        let sol = sols
            .iter()
            .filter(|s| s.theta0 == Some(theta0))
            .min_by(|a, b| a.fixed_point_residual.partial_cmp(&b.fixed_point_residual).unwrap())
            .ok_or(PersistError::NoConvergence { residual: f64::NAN, iterations: 0 })?;
        let at = |s: f64| sol.at(s);
        let s = linear_crossing(&at, z0, x0, t_star - sol.phase, period)
            .ok_or(PersistError::PhaseMismatch { theta_hat: sol.phase, theta0 })?;
        dist[k] = (at(s) - x0).norm();
    }
    let ratio = dist[1] / dist[0];
    Ok(Corollary1Probe {
        theta0,
        t_star,
        eps: eps_pair,
        dist,
        ratio,
        holds: ratio <= 0.7,
    })
}
