//! Locating the limit cycle by Poincaré-section shooting.
//!
//! The cycle is found in three passes: a first-return bootstrap on the
//! section through the seed, a Newton solve for `(ξ, T)` on that section,
//! and a final Newton polish on the section through the cycle point nearest
//! to the seed. The last step fixes the phase origin: `x0(0)` is the point
//! of the cycle closest to the seed.

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;
use thiserror::Error;

use crate::integrate::{flow, flow_with_variational, find_event, scan_sign_changes, Crossing, IntegrateError, Settings, Trajectory};
use crate::linalg::{cross, split_unit_eigenvalue, Mat2, Vec2};
use crate::model::PlanarSystem;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CycleError {
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error("field vanishes at the section point {0:?}")]
    DegenerateSection([f64; 2]),
    #[error("no sign-changing return to the section within t = {horizon}")]
    NoReturn { horizon: f64 },
    #[error("shooting Newton did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("shooting Jacobian is singular: {0}")]
    SingularJacobian(String),
    #[error("period {found} is not within 30% of the guess {guess}")]
    PeriodMismatch { found: f64, guess: f64 },
    #[error("orbit returns to its anchor at t = {t} < T; T is not the smallest period")]
    NotSmallestPeriod { t: f64 },
    #[error("cycle polyline encloses no area")]
    DegeneratePolyline,
}

/// Minimum number of steps per period for the final polish and the stored
/// orbit. The error-controlled step alone leaves the phase of `x0` a few
/// hundred ulps off, which the exponentially weighted `z1` amplifies.
const ORBIT_STEPS: f64 = 2048.0;

/// Outcome of a point-in-cycle query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Inside,
    Outside,
    OnBoundary,
}

/// A limit cycle `x0` of `ẋ = ψ(x)` with its smallest period.
#[derive(Debug, Clone)]
pub struct LimitCycle {
    orbit: Trajectory,
    period: f64,
    anchor: Vec2,
    orientation: i32,
    shooting_residual: f64,
    min_speed: f64,
    attracting: bool,
    newton_iterations: usize,
    polyline: Vec<Vec2>,
    poly_times: Vec<f64>,
    tol: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CycleSummary {
    pub period: f64,
    pub anchor: [f64; 2],
    pub orientation: i32,
    pub shooting_residual: f64,
    pub min_speed: f64,
    pub attracting: bool,
    pub newton_iterations: usize,
    pub polyline_points: usize,
    pub tol: f64,
}

impl LimitCycle {
    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn anchor(&self) -> Vec2 {
        self.anchor
    }

    /// `+1` when the interior lies to the left of the direction of motion.
    pub fn orientation(&self) -> i32 {
        self.orientation
    }

    pub fn shooting_residual(&self) -> f64 {
        self.shooting_residual
    }

    pub fn min_speed(&self) -> f64 {
        self.min_speed
    }

    pub fn is_attracting(&self) -> bool {
        self.attracting
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn orbit(&self) -> &Trajectory {
        &self.orbit
    }

    pub fn polyline(&self) -> &[Vec2] {
        &self.polyline
    }

    /// `x0(t)` for any real `t`, by periodicity.
    pub fn at(&self, t: f64) -> Vec2 {
        self.orbit.at(self.reduce(t))
    }

    /// Reduces `t` into `[0, T)`.
    pub fn reduce(&self, t: f64) -> f64 {
        let r = t.rem_euclid(self.period);
        if r >= self.period {
            0.0
        } else {
            r
        }
    }

    /// `n` equally spaced samples `x0(kT/n)`.
    pub fn sample(&self, n: usize) -> Vec<Vec2> {
        (0..n).map(|k| self.at(self.period * k as f64 / n as f64)).collect()
    }

    pub fn summary(&self) -> CycleSummary {
        CycleSummary {
            period: self.period,
            anchor: [self.anchor.x, self.anchor.y],
            orientation: self.orientation,
            shooting_residual: self.shooting_residual,
            min_speed: self.min_speed,
            attracting: self.attracting,
            newton_iterations: self.newton_iterations,
            polyline_points: self.polyline.len(),
            tol: self.tol,
        }
    }

    /// Distance from `p` to the cycle, refined on the dense orbit around the
    /// nearest polyline chord.
    pub fn distance(&self, p: &Vec2) -> f64 {
        let n = self.polyline.len();
        let (i, _) = nearest_segment(&self.polyline, p);
        let a = self.poly_times[(i + n - 1) % n];
        let b = self.poly_times[(i + 2) % n];
        let b = if b <= a { b + self.period } else { b };
        let a = if a > self.poly_times[i] { a - self.period } else { a };
        let (_, d2) = golden_min(|t| (self.at(t) - p).norm_squared(), a, b, 1e-14 * (1.0 + self.period));
        // chords cut inside the curve, so only the dense orbit is trusted
        d2.sqrt()
    }

    /// Membership in the open interior `U0`, by the winding number of the
    /// polyline around `p`.
    pub fn membership(&self, p: &Vec2) -> Membership {
        let scale = 1.0 + self.anchor.norm();
        if self.distance(p) <= 1e-9 * scale {
            return Membership::OnBoundary;
        }
        if winding_number(&self.polyline, p) != 0 {
            Membership::Inside
        } else {
            Membership::Outside
        }
    }

    /// `Ok(true)` iff `p ∈ U0`; points on the cycle are reported as `Err`.
    pub fn contains(&self, p: &Vec2) -> Result<bool, Membership> {
        match self.membership(p) {
            Membership::Inside => Ok(true),
            Membership::Outside => Ok(false),
            Membership::OnBoundary => Err(Membership::OnBoundary),
        }
    }
}

/// Signed (shoelace) area of a closed polyline; positive when counterclockwise.
pub fn signed_area(points: &[Vec2]) -> f64 {
    let n = points.len();
    let mut a = 0.0;
    for i in 0..n {
        a += cross(&points[i], &points[(i + 1) % n]);
    }
    0.5 * a
}

/// Orientation `±1` of a closed polyline from its signed area.
pub fn orientation_of(points: &[Vec2]) -> Result<i32, CycleError> {
    let a = signed_area(points);
    let scale = points.iter().map(|p| p.norm_squared()).fold(0.0, f64::max);
    if a.abs() <= 1e-12 * (1.0 + scale) {
        return Err(CycleError::DegeneratePolyline);
    }
    Ok(if a > 0.0 { 1 } else { -1 })
}

/// Winding number of a closed polyline around `p`.
pub fn winding_number(points: &[Vec2], p: &Vec2) -> i64 {
    let n = points.len();
    let mut total = 0.0;
    for i in 0..n {
        let a = points[i] - p;
        let b = points[(i + 1) % n] - p;
        total += cross(&a, &b).atan2(a.dot(&b));
    }
    (total / (2.0 * std::f64::consts::PI)).round() as i64
}

pub fn polyline_distance(points: &[Vec2], p: &Vec2) -> f64 {
    nearest_segment(points, p).1
}

/// Index of the chord `(points[i], points[i+1])` nearest to `p`, and its distance.
fn nearest_segment(points: &[Vec2], p: &Vec2) -> (usize, f64) {
    let n = points.len();
    let mut best = (0, f64::INFINITY);
    for i in 0..n {
        let a = points[i];
        let b = points[(i + 1) % n];
        let d = b - a;
        let l2 = d.norm_squared();
        let s = if l2 > 0.0 { ((p - a).dot(&d) / l2).clamp(0.0, 1.0) } else { 0.0 };
        let dist = (a + d * s - p).norm();
        if dist < best.1 {
            best = (i, dist);
        }
    }
    best
}

/// Autonomous field used for shooting: `ψ` or `−ψ`.
struct Shooter<'a> {
    system: &'a PlanarSystem,
    sign: f64,
    settings: Settings,
}

impl Shooter<'_> {
    fn field(&self, x: &Vec2) -> Vec2 {
        self.system.psi(x) * self.sign
    }

    fn jac(&self, x: &Vec2) -> Mat2 {
        self.system.jacobian(x) * self.sign
    }

    /// First rising crossing of the section `⟨n, x − p⟩ = 0` after leaving `x`.
    fn first_return(&self, x: Vec2, p: Vec2, n: Vec2, chunk: f64, horizon: f64) -> Result<(f64, Vec2), CycleError> {
        let mut t0 = 0.0;
        let mut start = x;
        let skip = 1e-9 * chunk;
        while t0 < horizon {
            let traj = flow(|_, y| self.field(y), start, t0, t0 + chunk, &self.settings)?;
            let lo = if t0 == 0.0 { skip } else { t0 };
            let hit = find_event(&traj, |y| n.dot(&(Vec2::new(y[0], y[1]) - p)), (lo, t0 + chunk))
                .into_iter()
                .find(|e| e.direction == Crossing::Rising);
            if let Some(e) = hit {
                return Ok((e.t, traj.at(e.t)));
            }
            start = traj.at(t0 + chunk);
            t0 += chunk;
        }
        Err(CycleError::NoReturn { horizon })
    }

    /// Newton on `(ξ, T)` for `Φ(T, ξ) = ξ`, `⟨n, ξ − p⟩ = 0`.
    fn newton(&self, p: Vec2, n: Vec2, mut xi: Vec2, mut period: f64) -> Result<(Vec2, f64, Mat2, usize), CycleError> {
        let residual = |xi: &Vec2, period: f64| -> Result<(Vector3<f64>, Mat2, Vec2), CycleError> {
            let traj = flow_with_variational(|_, y| self.field(y), |y| self.jac(y), *xi, 0.0, period, &self.settings)?;
            let end = traj.end_state();
            let r = Vector3::new(end.x - xi.x, end.y - xi.y, n.dot(&(xi - p)));
            Ok((r, traj.end_matrix(), end))
        };
        let (mut r, mut m, mut end) = residual(&xi, period)?;
        let target = 1e-11 * (1.0 + xi.norm());
        let mut stalled = 0;
        for it in 1..=50 {
            let f_end = self.field(&end);
            let a = m - Mat2::identity();
            let jm = Matrix3::new(a[(0, 0)], a[(0, 1)], f_end.x, a[(1, 0)], a[(1, 1)], f_end.y, n.x, n.y, 0.0);
            let sv = jm.singular_values();
            let (smax, smin) = (sv.max(), sv.min());
            if !(smin > 1e-8 * smax) {
                let why = match split_unit_eigenvalue(&m) {
                    Some((_, other)) if (other - 1.0).abs() < 1e-6 => "multiplier 1 is not simple".to_string(),
                    _ => format!("condition estimate {:e}", smin / smax),
                };
                return Err(CycleError::SingularJacobian(why));
            }
            let delta = jm.lu().solve(&(-r)).ok_or_else(|| CycleError::SingularJacobian("LU failed".into()))?;
            let norm0 = r.norm();
            let mut lambda = 1.0;
            let mut accepted = None;
            for _ in 0..12 {
                let cand_xi = xi + Vec2::new(delta[0], delta[1]) * lambda;
                let cand_t = period + delta[2] * lambda;
                if cand_t > 0.0 {
                    if let Ok(res) = residual(&cand_xi, cand_t) {
                        if res.0.norm() < norm0 || lambda < 1e-3 || norm0 < target {
                            accepted = Some((cand_xi, cand_t, res));
                            break;
                        }
                    }
                }
                lambda *= 0.5;
            }
            let Some((nx, nt, (nr, nm, ne))) = accepted else {
                return Err(CycleError::NewtonDiverged { iterations: it, residual: norm0 });
            };
            let step = (Vec2::new(delta[0], delta[1]) * lambda).norm() + (delta[2] * lambda).abs();
            let improved = nr.norm() < 0.5 * norm0;
            xi = nx;
            period = nt;
            r = nr;
            m = nm;
            end = ne;
            if r.norm() <= target && step <= 1e-9 * (1.0 + xi.norm() + period) {
                return Ok((xi, period, m, it));
            }
            if r.norm() <= target {
                stalled += 1;
            } else if !improved {
                stalled += 1;
            } else {
                stalled = 0;
            }
            if stalled >= 3 {
                if r.norm() <= 10.0 * target {
                    return Ok((xi, period, m, it));
                }
                return Err(CycleError::NewtonDiverged { iterations: it, residual: r.norm() });
            }
        }
        Err(CycleError::NewtonDiverged { iterations: 50, residual: r.norm() })
    }
}

fn unit_normal(v: &Vec2, at: &Vec2) -> Result<Vec2, CycleError> {
    let s = v.norm();
    if !(s > 1e-10 * (1.0 + at.norm())) {
        return Err(CycleError::DegenerateSection([at.x, at.y]));
    }
    Ok(v / s)
}

/// Bootstrap by iterated first returns; `Some` when the iterates settle.
fn bootstrap(sh: &Shooter, seed: Vec2, chunk: f64, horizon: f64) -> Result<(Vec2, f64, bool), CycleError> {
    let n = unit_normal(&sh.field(&seed), &seed)?;
    let mut x = seed;
    let mut last_gap = f64::INFINITY;
    let mut growing = 0;
    let mut tau = chunk;
    for _ in 0..40 {
        let (t, y) = sh.first_return(x, seed, n, chunk, horizon)?;
        let gap = (y - x).norm();
        tau = t;
        x = y;
        if gap <= 1e-8 * (1.0 + x.norm()) {
            return Ok((x, tau, true));
        }
        if gap > last_gap {
            growing += 1;
            if growing >= 2 {
                return Ok((x, tau, false));
            }
        }
        last_gap = gap;
    }
    Ok((x, tau, last_gap < 1e-3))
}

/// Finds the limit cycle reached from `seed`.
pub fn find_limit_cycle(
    system: &PlanarSystem,
    seed: Vec2,
    period_guess: Option<f64>,
    tol: f64,
) -> Result<LimitCycle, CycleError> {
    let system = system.unforced();
    let settings = Settings::new(tol);
    let chunk = period_guess.map(|g| 0.5 * g).unwrap_or(2.0);
    let horizon = period_guess.map(|g| 200.0 * g).unwrap_or(1000.0);

    // direction probe: a repelling cycle repels the forward bootstrap
    let mut chosen = None;
    let mut first_err = None;
    for sign in [1.0, -1.0] {
        let sh = Shooter { system: &system, sign, settings: settings.clone() };
        match bootstrap(&sh, seed, chunk, horizon) {
            Ok((x, tau, settled)) => {
                let probe = flow_with_variational(|_, y| sh.field(y), |y| sh.jac(y), x, 0.0, tau, &settings)?;
                let m = probe.end_matrix();
                let contracting = m.determinant() < 1.0;
                if settled || contracting {
                    chosen = Some((sign, x, tau));
                    break;
                }
            }
            Err(e @ CycleError::DegenerateSection(_)) => return Err(e),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let Some((sign, x_boot, tau)) = chosen else {
        return Err(first_err.unwrap_or(CycleError::NoReturn { horizon }));
    };
    let sh = Shooter { system: &system, sign, settings: settings.clone() };

    let n0 = unit_normal(&sh.field(&seed), &seed)?;
    let (xi, period, _, it1) = sh.newton(seed, n0, x_boot, tau)?;

    // re-anchor at the cycle point nearest to the seed
    let traj = flow(|_, y| sh.field(y), xi, 0.0, period, &settings)?;
    let t_near = nearest_time(&traj, &seed, period, |y| sh.field(y));
    let q = traj.at(t_near);
    let nq = unit_normal(&sh.field(&q), &q)?;
    let fine = settings.clone().with_max_step(period / ORBIT_STEPS);
    let sh = Shooter { system: &system, sign, settings: fine.clone() };
    let (anchor, period, m, it2) = sh.newton(q, nq, q, period)?;

    if let Some(g) = period_guess {
        if (period - g).abs() > 0.3 * g {
            return Err(CycleError::PeriodMismatch { found: period, guess: g });
        }
    }
    if let Some((_, other)) = split_unit_eigenvalue(&m) {
        if (other - 1.0).abs() < 1e-6 {
            return Err(CycleError::SingularJacobian("multiplier 1 is not simple".into()));
        }
    }

    // the orbit of ψ itself; a repelling cycle is traced backwards from T
    let orbit = if sign > 0.0 {
        flow(|_, y| system.psi(y), anchor, 0.0, period, &fine)?
    } else {
        flow(|_, y| system.psi(y), anchor, period, 0.0, &fine)?
    };
    let shooting_residual = (orbit.at(period) - orbit.at(0.0)).norm();
    let anchor = orbit.at(0.0);

    check_smallest_period(&system, &orbit, anchor, period)?;

    let (poly_times, polyline) = adaptive_polyline(&orbit, period, 1e-8 * (1.0 + anchor.norm()));
    let orientation = orientation_of(&polyline)?;
    let min_speed = polyline.iter().map(|p| system.psi(p).norm()).fold(f64::INFINITY, f64::min);

    Ok(LimitCycle {
        orbit,
        period,
        anchor,
        orientation,
        shooting_residual,
        min_speed,
        attracting: sign > 0.0,
        newton_iterations: it1 + it2,
        polyline,
        poly_times,
        tol,
    })
}

fn nearest_time(traj: &Trajectory, p: &Vec2, period: f64, field: impl Fn(&Vec2) -> Vec2) -> f64 {
    let n = 2048;
    let d = |t: f64| (traj.at(t) - p).norm_squared();
    let mut best = (0.0, f64::INFINITY);
    for k in 0..n {
        let t = period * k as f64 / n as f64;
        let v = d(t);
        if v < best.1 {
            best = (t, v);
        }
    }
    // the minimizer is a root of ⟨x(t) − p, ẋ(t)⟩; a value-based search
    // would only resolve it to about √ε
    let h = period / n as f64;
    let g = |t: f64| {
        let x = traj.at(t.clamp(0.0, period));
        (x - p).dot(&field(&x))
    };
    let (a, b) = (best.0 - h, best.0 + h);
    let grid: Vec<f64> = (0..=16).map(|k| a + (b - a) * k as f64 / 16.0).collect();
    let roots = scan_sign_changes(|t| g(t.rem_euclid(period)), &grid);
    match roots.iter().find(|e| e.direction == Crossing::Rising) {
        Some(e) => e.t.rem_euclid(period),
        None => best.0,
    }
}

/// Golden-section minimization on `[a, b]`; returns `(argmin, min)`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= xtol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let m = 0.5 * (a + b);
    let fm = f(m);
    let mut best = (m, fm);
    for (x, v) in [(c, fc), (d, fd)] {
        if v < best.1 {
            best = (x, v);
        }
    }
    best
}

fn check_smallest_period(system: &PlanarSystem, orbit: &Trajectory, anchor: Vec2, period: f64) -> Result<(), CycleError> {
    let n = system.psi(&anchor);
    let n = n / n.norm();
    let margin = 1e-6 * period;
    let events = find_event(orbit, |y| n.dot(&(Vec2::new(y[0], y[1]) - anchor)), (margin, period - margin));
    let tol = 1e-6 * (1.0 + anchor.norm());
    for e in events {
        if e.direction == Crossing::Rising && (orbit.at(e.t) - anchor).norm() < tol {
            return Err(CycleError::NotSmallestPeriod { t: e.t });
        }
    }
    Ok(())
}

/// Samples the orbit so that every chord deviates from the curve by at most
/// `sag` at its midpoint.
fn adaptive_polyline(orbit: &Trajectory, period: f64, sag: f64) -> (Vec<f64>, Vec<Vec2>) {
    let base = 256;
    let mut out = (Vec::new(), Vec::new());
    for k in 0..base {
        let a = period * k as f64 / base as f64;
        let b = period * (k + 1) as f64 / base as f64;
        refine(orbit, a, b, sag, 0, &mut out);
    }
    out
}

fn refine(orbit: &Trajectory, a: f64, b: f64, sag: f64, depth: usize, out: &mut (Vec<f64>, Vec<Vec2>)) {
    let (pa, pb) = (orbit.at(a), orbit.at(b.min(orbit.hi())));
    let m = 0.5 * (a + b);
    let pm = orbit.at(m);
    if depth >= 20 || (pm - 0.5 * (pa + pb)).norm() <= sag {
        out.0.push(a);
        out.1.push(pa);
        return;
    }
    refine(orbit, a, m, sag, depth + 1, out);
    refine(orbit, m, b, sag, depth + 1, out);
}
