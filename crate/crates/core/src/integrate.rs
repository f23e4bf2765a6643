//! Adaptive Dormand–Prince 5(4) integration with dense output.
//!
//! The integrator is generic over the state dimension so that the base flow,
//! the variational equations and the inhomogeneous linearized systems share
//! one implementation. Every accepted step keeps the coefficients of the
//! fourth-order continuous extension, so a [`DenseTrajectory`] can be queried
//! anywhere inside its span.

use nalgebra::SVector;
use thiserror::Error;

use crate::linalg::{Mat2, Vec2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrateError {
    #[error("tolerance {0} outside [1e-13, 1e-3]")]
    BadTolerance(f64),
    #[error("step size underflow at t = {t} (stiff or blowing up)")]
    StepUnderflow { t: f64 },
    #[error("maximum number of steps exceeded at t = {t}")]
    TooManySteps { t: f64 },
    #[error("non-finite field value at t = {t}")]
    NonFinite { t: f64 },
    #[error("query time {t} outside trajectory span [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },
    #[error("Jacobian evaluation failed at t = {t}")]
    Jacobian { t: f64 },
}

pub const MIN_TOL: f64 = 1e-13;
pub const MAX_TOL: f64 = 1e-3;

/// Integration settings shared by every call site.
#[derive(Debug, Clone)]
pub struct Settings {
    pub tol: f64,
    pub max_steps: usize,
    /// Times the integrator must step onto exactly (kinks of a forcing term).
    pub breakpoints: Vec<f64>,
    pub max_step: Option<f64>,
}

impl Settings {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            max_steps: 2_000_000,
            breakpoints: Vec::new(),
            max_step: None,
        }
    }

    pub fn with_breakpoints(mut self, breakpoints: Vec<f64>) -> Self {
        self.breakpoints = breakpoints;
        self
    }

    pub fn with_max_step(mut self, h: f64) -> Self {
        self.max_step = Some(h);
        self
    }

    fn validate(&self) -> Result<(), IntegrateError> {
        if !(MIN_TOL..=MAX_TOL).contains(&self.tol) || !self.tol.is_finite() {
            return Err(IntegrateError::BadTolerance(self.tol));
        }
        Ok(())
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Continuous extension (Hairer, Nørsett & Wanner, DOPRI5 contd5).
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone)]
struct Segment<const N: usize> {
    t: f64,
    h: f64,
    c: [SVector<f64, N>; 5],
}

impl<const N: usize> Segment<N> {
    fn eval(&self, t: f64) -> SVector<f64, N> {
        let s = ((t - self.t) / self.h).clamp(0.0, 1.0);
        if s == 1.0 {
            // endpoint reproduced exactly
            return self.c[0] + self.c[1];
        }
        let s1 = 1.0 - s;
        self.c[0] + (self.c[1] + (self.c[2] + (self.c[3] + self.c[4] * s1) * s) * s1) * s
    }

    fn end(&self) -> f64 {
        self.t + self.h
    }
}

/// Dense solution of an initial value problem over `[t0, t1]` (or `[t1, t0]`
/// when integrating backwards).
#[derive(Debug, Clone)]
pub struct DenseTrajectory<const N: usize> {
    segments: Vec<Segment<N>>,
    start: SVector<f64, N>,
    t0: f64,
    t1: f64,
    tol: f64,
}

pub type Trajectory = DenseTrajectory<2>;

impl<const N: usize> DenseTrajectory<N> {
    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn n_steps(&self) -> usize {
        self.segments.len()
    }

    pub fn lo(&self) -> f64 {
        self.t0.min(self.t1)
    }

    pub fn hi(&self) -> f64 {
        self.t0.max(self.t1)
    }

    pub fn start(&self) -> SVector<f64, N> {
        self.start
    }

    pub fn end(&self) -> SVector<f64, N> {
        self.segments
            .last()
            .map(|s| s.c[0] + s.c[1])
            .unwrap_or(self.start)
    }

    /// Accepted step endpoints in integration order, including `t0`.
    pub fn step_times(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.segments.len() + 1);
        out.push(self.t0);
        out.extend(self.segments.iter().map(Segment::end));
        out
    }

    pub fn try_eval(&self, t: f64) -> Result<SVector<f64, N>, IntegrateError> {
        let slack = 1e-12 * (1.0 + self.t0.abs().max(self.t1.abs()));
        if !(t >= self.lo() - slack && t <= self.hi() + slack) {
            return Err(IntegrateError::OutOfRange {
                t,
                lo: self.lo(),
                hi: self.hi(),
            });
        }
        if self.segments.is_empty() {
            return Ok(self.start);
        }
        let forward = self.t1 >= self.t0;
        // segments are monotone in integration order
        let idx = self.segments.partition_point(|s| {
            if forward {
                s.end() < t
            } else {
                s.end() > t
            }
        });
        let idx = idx.min(self.segments.len() - 1);
        Ok(self.segments[idx].eval(t))
    }

    /// Evaluates the trajectory, panicking outside its span.
    pub fn eval(&self, t: f64) -> SVector<f64, N> {
        match self.try_eval(t) {
            Ok(v) => v,
            Err(e) => panic!("{e}"),
        }
    }
}

impl Trajectory {
    pub fn at(&self, t: f64) -> Vec2 {
        self.eval(t)
    }
}

/// Solution of the base flow coupled with its variational equation,
/// `Ẏ = ψ'(x(t)) Y`, `Y(t0) = I`.
#[derive(Debug, Clone)]
pub struct MatrixTrajectory {
    inner: DenseTrajectory<6>,
}

impl MatrixTrajectory {
    pub fn state(&self, t: f64) -> Vec2 {
        let v = self.inner.eval(t);
        Vec2::new(v[0], v[1])
    }

    pub fn matrix(&self, t: f64) -> Mat2 {
        unpack_matrix(&self.inner.eval(t))
    }

    pub fn end_matrix(&self) -> Mat2 {
        unpack_matrix(&self.inner.end())
    }

    pub fn end_state(&self) -> Vec2 {
        let v = self.inner.end();
        Vec2::new(v[0], v[1])
    }

    pub fn inner(&self) -> &DenseTrajectory<6> {
        &self.inner
    }
}

fn unpack_matrix(v: &SVector<f64, 6>) -> Mat2 {
    Mat2::new(v[2], v[4], v[3], v[5])
}

fn error_norm<const N: usize>(
    err: &SVector<f64, N>,
    y0: &SVector<f64, N>,
    y1: &SVector<f64, N>,
    tol: f64,
) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let sc = tol + tol * y0[i].abs().max(y1[i].abs());
        let r = err[i] / sc;
        acc += r * r;
    }
    (acc / N as f64).sqrt()
}

fn check_finite<const N: usize>(v: &SVector<f64, N>, t: f64) -> Result<(), IntegrateError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(IntegrateError::NonFinite { t })
    }
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction).
pub fn integrate<const N: usize, F>(
    f: F,
    y0: SVector<f64, N>,
    t0: f64,
    t1: f64,
    settings: &Settings,
) -> Result<DenseTrajectory<N>, IntegrateError>
where
    F: Fn(f64, &SVector<f64, N>) -> SVector<f64, N>,
{
    settings.validate()?;
    check_finite(&y0, t0)?;
    let tol = settings.tol;
    let mut traj = DenseTrajectory {
        segments: Vec::new(),
        start: y0,
        t0,
        t1,
        tol,
    };
    if t1 == t0 {
        return Ok(traj);
    }
    let dir = if t1 > t0 { 1.0 } else { -1.0 };
    let span = (t1 - t0).abs();
    let hmax = settings.max_step.unwrap_or(span).min(span);

    // breakpoints strictly inside the interval, in integration order
    let mut stops: Vec<f64> = settings
        .breakpoints
        .iter()
        .copied()
        .filter(|&b| (b - t0) * dir > 0.0 && (t1 - b) * dir > 0.0)
        .collect();
    stops.sort_by(|a, b| (a * dir).partial_cmp(&(b * dir)).unwrap());
    stops.dedup();
    let mut next_stop = 0;

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    check_finite(&k1, t)?;
    let mut h = initial_step(&f, t, &y, &k1, dir, tol, hmax);
    let mut reject_streak = false;
    let mut steps = 0usize;

    loop {
        if steps >= settings.max_steps {
            return Err(IntegrateError::TooManySteps { t });
        }
        let remaining = (t1 - t).abs();
        let target = if next_stop < stops.len() {
            stops[next_stop]
        } else {
            t1
        };
        let to_target = (target - t).abs();
        let mut hs = h.abs().min(hmax);
        let mut lands = false;
        if hs >= to_target * (1.0 - 1e-12) || to_target - hs < 1e-12 * (1.0 + t.abs()) {
            hs = to_target;
            lands = true;
        }
        if hs < 1e-14 * (1.0 + t.abs()) && remaining > 1e-14 * (1.0 + t.abs()) && !lands {
            return Err(IntegrateError::StepUnderflow { t });
        }
        let hh = hs * dir;

        let k2 = f(t + C2 * hh, &(y + k1 * (A21 * hh)));
        let k3 = f(t + C3 * hh, &(y + (k1 * A31 + k2 * A32) * hh));
        let k4 = f(t + C4 * hh, &(y + (k1 * A41 + k2 * A42 + k3 * A43) * hh));
        let k5 = f(
            t + C5 * hh,
            &(y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * hh),
        );
        let k6 = f(
            t + hh,
            &(y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * hh),
        );
        let y_new = y + (k1 * A71 + k3 * A73 + k4 * A74 + k5 * A75 + k6 * A76) * hh;
        let t_new = if lands { target } else { t + hh };
        let k7 = f(t_new, &y_new);
        steps += 1;

        let finite = y_new.iter().chain(k7.iter()).all(|v| v.is_finite());
        let err_vec = (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * hh;
        let err = if finite {
            error_norm(&err_vec, &y, &y_new, tol)
        } else {
            f64::INFINITY
        };

        if err <= 1.0 {
            let ydiff = y_new - y;
            let bspl = k1 * hh - ydiff;
            let c = [
                y,
                ydiff,
                bspl,
                ydiff - k7 * hh - bspl,
                (k1 * D1 + k3 * D3 + k4 * D4 + k5 * D5 + k6 * D6 + k7 * D7) * hh,
            ];
            traj.segments.push(Segment { t, h: t_new - t, c });
            t = t_new;
            y = y_new;
            k1 = k7;
            if lands {
                if next_stop < stops.len() {
                    next_stop += 1;
                } else {
                    break;
                }
            }
            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, if reject_streak { 1.0 } else { 5.0 })
            };
            reject_streak = false;
            h = hs * fac;
        } else {
            if !finite && hs < 1e-14 * (1.0 + t.abs()) {
                return Err(IntegrateError::NonFinite { t });
            }
            let fac = if err.is_finite() {
                (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.25
            };
            reject_streak = true;
            h = hs * fac;
            if h < 1e-14 * (1.0 + t.abs()) {
                return Err(if finite {
                    IntegrateError::StepUnderflow { t }
                } else {
                    IntegrateError::NonFinite { t }
                });
            }
        }
    }
    Ok(traj)
}

fn initial_step<const N: usize, F>(
    f: &F,
    t: f64,
    y: &SVector<f64, N>,
    k1: &SVector<f64, N>,
    dir: f64,
    tol: f64,
    hmax: f64,
) -> f64
where
    F: Fn(f64, &SVector<f64, N>) -> SVector<f64, N>,
{
    let scaled = |v: &SVector<f64, N>| {
        let mut acc = 0.0;
        for i in 0..N {
            let sc = tol + tol * y[i].abs();
            acc += (v[i] / sc).powi(2);
        }
        (acc / N as f64).sqrt()
    };
    let d0 = scaled(y);
    let d1 = scaled(k1);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(hmax);
    let y1 = y + k1 * (h0 * dir);
    let k2 = f(t + h0 * dir, &y1);
    let d2 = scaled(&(k2 - k1)) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(hmax)
}

/// Planar flow `Ω(·, t0, start)` of a (possibly time-dependent) field.
pub fn flow<F>(
    field: F,
    start: Vec2,
    t0: f64,
    t1: f64,
    settings: &Settings,
) -> Result<Trajectory, IntegrateError>
where
    F: Fn(f64, &Vec2) -> Vec2,
{
    integrate(field, start, t0, t1, settings)
}

/// Base flow of `field` together with the fundamental matrix of its
/// linearization, `Ẏ = jac(x(t)) Y`, `Y(t0) = I`.
pub fn flow_with_variational<F, J>(
    field: F,
    jac: J,
    start: Vec2,
    t0: f64,
    t1: f64,
    settings: &Settings,
) -> Result<MatrixTrajectory, IntegrateError>
where
    F: Fn(f64, &Vec2) -> Vec2,
    J: Fn(&Vec2) -> Mat2,
{
    let y0 = SVector::<f64, 6>::from([start.x, start.y, 1.0, 0.0, 0.0, 1.0]);
    let jac_failed = std::cell::Cell::new(None);
    let rhs = |t: f64, s: &SVector<f64, 6>| {
        let x = Vec2::new(s[0], s[1]);
        let dx = field(t, &x);
        let a = jac(&x);
        if !a.iter().all(|v| v.is_finite()) && jac_failed.get().is_none() {
            jac_failed.set(Some(t));
        }
        let y = unpack_matrix(s);
        let dy = a * y;
        SVector::<f64, 6>::from([dx.x, dx.y, dy[(0, 0)], dy[(1, 0)], dy[(0, 1)], dy[(1, 1)]])
    };
    let result = integrate(rhs, y0, t0, t1, settings);
    if let Some(t) = jac_failed.get() {
        return Err(IntegrateError::Jacobian { t });
    }
    Ok(MatrixTrajectory { inner: result? })
}

/// Direction of a sign change of an event function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Crossing {
    /// `g` goes from negative to positive.
    Rising,
    /// `g` goes from positive to negative.
    Falling,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub t: f64,
    pub direction: Crossing,
}

/// Locates sign changes of `g(x(t))` inside `window`, refined by bisection on
/// the dense output. Events are returned in increasing time order.
pub fn find_event<const N: usize, G>(
    traj: &DenseTrajectory<N>,
    g: G,
    window: (f64, f64),
) -> Vec<Event>
where
    G: Fn(&SVector<f64, N>) -> f64,
{
    let lo = window.0.min(window.1).max(traj.lo());
    let hi = window.0.max(window.1).min(traj.hi());
    if !(hi > lo) {
        return Vec::new();
    }
    // sample each step at quarter points
    let mut grid: Vec<f64> = traj
        .step_times()
        .into_iter()
        .filter(|&t| t > lo && t < hi)
        .collect();
    grid.push(lo);
    grid.push(hi);
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    let mut fine = Vec::with_capacity(grid.len() * 4);
    for w in grid.windows(2) {
        for k in 0..4 {
            fine.push(w[0] + (w[1] - w[0]) * k as f64 / 4.0);
        }
    }
    fine.push(hi);
    scan_sign_changes(|t| g(&traj.eval(t)), &fine)
}

/// Sign-change scan of a scalar function over an increasing grid with
/// bisection refinement. Exact zeros at grid nodes are reported once.
pub fn scan_sign_changes<G: Fn(f64) -> f64>(g: G, grid: &[f64]) -> Vec<Event> {
    let mut out = Vec::new();
    if grid.len() < 2 {
        return out;
    }
    let vals: Vec<f64> = grid.iter().map(|&t| g(t)).collect();
    for i in 0..grid.len() - 1 {
        let (ga, gb) = (vals[i], vals[i + 1]);
        if ga == 0.0 {
            // count a node zero only where the sign actually changes across it
            if i > 0 && vals[i - 1] * gb < 0.0 {
                out.push(Event {
                    t: grid[i],
                    direction: if gb > 0.0 { Crossing::Rising } else { Crossing::Falling },
                });
            }
            continue;
        }
        if ga * gb < 0.0 {
            let t = bisect(&g, grid[i], grid[i + 1], ga);
            out.push(Event {
                t,
                direction: if gb > 0.0 { Crossing::Rising } else { Crossing::Falling },
            });
        }
    }
    out
}

/// Bisection on a bracketing interval, down to 1e-10 relative plus ulp-level
/// stagnation.
pub fn bisect<G: Fn(f64) -> f64>(g: &G, mut a: f64, mut b: f64, mut ga: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a.min(b) || m >= a.max(b) {
            break;
        }
        let gm = g(m);
        if gm == 0.0 {
            return m;
        }
        if (gm < 0.0) == (ga < 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs()) {
            break;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn hopf(_t: f64, x: &Vec2) -> Vec2 {
        let r2 = x.norm_squared();
        Vec2::new(x.x - x.y - x.x * r2, x.x + x.y - x.y * r2)
    }

    fn hopf_jac(x: &Vec2) -> Mat2 {
        let (a, b) = (x.x, x.y);
        Mat2::new(
            1.0 - 3.0 * a * a - b * b,
            -1.0 - 2.0 * a * b,
            1.0 - 2.0 * a * b,
            1.0 - a * a - 3.0 * b * b,
        )
    }

    #[test]
    fn zero_field_is_constant() {
        let traj = flow(|_, _| Vec2::zeros(), Vec2::new(1.0, 0.0), 0.0, 2.0 * PI, &Settings::new(1e-10)).unwrap();
        for k in 0..=20 {
            let p = traj.at(2.0 * PI * k as f64 / 20.0);
            assert_eq!(p, Vec2::new(1.0, 0.0));
        }
    }

    #[test]
    fn hopf_circle_returns() {
        let traj = flow(hopf, Vec2::new(1.0, 0.0), 0.0, 2.0 * PI, &Settings::new(1e-12)).unwrap();
        assert!((traj.end() - Vec2::new(1.0, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn rotation_half_turn_and_backward() {
        let rot = |_t: f64, x: &Vec2| Vec2::new(-x.y, x.x);
        let s = Settings::new(1e-12);
        let fw = flow(rot, Vec2::new(1.0, 0.0), 0.0, PI, &s).unwrap();
        assert!((fw.end() - Vec2::new(-1.0, 0.0)).norm() < 1e-9);
        let bw = flow(rot, fw.end(), PI, 0.0, &s).unwrap();
        assert!((bw.end() - Vec2::new(1.0, 0.0)).norm() < 10.0 * 1e-12 * 10.0);
        // backward trajectory evaluates in its own span
        let mid = bw.at(PI / 2.0);
        assert!((mid - Vec2::new(0.0, 1.0)).norm() < 1e-9);
    }

    #[test]
    fn time_reversal_returns_start() {
        let s = Settings::new(1e-10);
        let start = Vec2::new(1.3, -0.2);
        let fw = flow(hopf, start, 0.0, 1.0, &s).unwrap();
        let bw = flow(hopf, fw.end(), 1.0, 0.0, &s).unwrap();
        assert!((bw.end() - start).norm() < 10.0 * s.tol);
    }

    #[test]
    fn step_endpoints_reproduced_and_continuous() {
        let s = Settings::new(1e-9);
        let traj = flow(hopf, Vec2::new(1.5, 0.3), 0.0, 5.0, &s).unwrap();
        for (i, seg) in traj.segments.iter().enumerate() {
            let end = seg.c[0] + seg.c[1];
            assert_eq!(seg.eval(seg.end()), end);
            if let Some(next) = traj.segments.get(i + 1) {
                assert_eq!(next.c[0], end);
                assert!((next.eval(next.t) - end).norm() < 10.0 * s.tol);
            }
        }
    }

    #[test]
    fn dense_output_accuracy_on_rotation() {
        let rot = |_t: f64, x: &Vec2| Vec2::new(-x.y, x.x);
        let traj = flow(rot, Vec2::new(1.0, 0.0), 0.0, 6.0, &Settings::new(1e-10)).unwrap();
        for k in 0..600 {
            let t = 0.01 * k as f64 + 0.0037;
            let exact = Vec2::new(t.cos(), t.sin());
            assert!((traj.at(t) - exact).norm() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn out_of_range_rejected() {
        let traj = flow(hopf, Vec2::new(1.0, 0.0), 0.0, 1.0, &Settings::new(1e-8)).unwrap();
        assert!(traj.try_eval(1.5).is_err());
        assert!(traj.try_eval(-0.1).is_err());
    }

    #[test]
    fn bad_tolerance_rejected() {
        let r = flow(hopf, Vec2::new(1.0, 0.0), 0.0, 1.0, &Settings::new(1e-2));
        assert_eq!(r.unwrap_err(), IntegrateError::BadTolerance(1e-2));
    }

    #[test]
    fn blow_up_reported() {
        let r = flow(|_, x: &Vec2| Vec2::new(x.x * x.x, 0.0), Vec2::new(1.0, 0.0), 0.0, 2.0, &Settings::new(1e-8));
        match r {
            Err(IntegrateError::StepUnderflow { t }) | Err(IntegrateError::NonFinite { t }) => {
                assert!((t - 1.0).abs() < 1e-2, "t = {t}")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn breakpoints_are_step_points() {
        let s = Settings::new(1e-8).with_breakpoints(vec![0.3, 1.7, 5.0]);
        let traj = flow(hopf, Vec2::new(1.2, 0.0), 0.0, 2.0, &s).unwrap();
        let ts = traj.step_times();
        assert!(ts.contains(&0.3) && ts.contains(&1.7));
        assert_eq!(*ts.last().unwrap(), 2.0);
    }

    #[test]
    fn halving_tol_halves_error() {
        let err = |tol: f64| {
            let traj = flow(hopf, Vec2::new(1.0, 0.0), 0.0, 2.0 * PI, &Settings::new(tol)).unwrap();
            (traj.end() - Vec2::new(1.0, 0.0)).norm()
        };
        for tol in [1e-5, 1e-6, 1e-7] {
            let (e1, e2) = (err(tol), err(tol / 2.0));
            assert!(e1 / e2 >= 2.0, "tol {tol}: {e1} vs {e2}");
        }
    }

    #[test]
    fn variational_hopf_multipliers() {
        let mt = flow_with_variational(hopf, hopf_jac, Vec2::new(1.0, 0.0), 0.0, 2.0 * PI, &Settings::new(1e-12)).unwrap();
        let m = mt.end_matrix();
        let det = m.determinant();
        let tr = m.trace();
        let big = 0.5 * (tr + (tr * tr - 4.0 * det).sqrt());
        let small = det / big;
        assert_relative_eq!(big, 1.0, max_relative = 1e-6);
        assert_relative_eq!(small, (-4.0 * PI).exp(), max_relative = 1e-6);
    }

    #[test]
    fn variational_zero_jacobian_and_empty_interval() {
        let s = Settings::new(1e-10);
        let mt = flow_with_variational(|_, _| Vec2::new(1.0, 0.0), |_| Mat2::zeros(), Vec2::zeros(), 0.0, 3.0, &s).unwrap();
        for k in 0..10 {
            assert_eq!(mt.matrix(0.3 * k as f64), Mat2::identity());
        }
        let mt = flow_with_variational(hopf, hopf_jac, Vec2::new(0.4, 0.1), 2.0, 2.0, &s).unwrap();
        assert_eq!(mt.matrix(2.0), Mat2::identity());
        assert_eq!(mt.state(2.0), Vec2::new(0.4, 0.1));
        assert_eq!(mt.inner().n_steps(), 0);
    }

    #[test]
    fn liouville_along_offcycle_orbit() {
        // det Y(t) = exp(∫ div ψ) with the divergence integrated by Simpson
        let s = Settings::new(1e-12);
        let mt = flow_with_variational(hopf, hopf_jac, Vec2::new(0.6, 0.2), 0.0, 3.0, &s).unwrap();
        let n = 20000;
        let h = 3.0 / n as f64;
        let div = |t: f64| {
            let x = mt.state(t);
            2.0 - 4.0 * x.norm_squared()
        };
        let mut acc = div(0.0) + div(3.0);
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * div(i as f64 * h);
        }
        let integral = acc * h / 3.0;
        assert_relative_eq!(mt.end_matrix().determinant(), integral.exp(), max_relative = 1e-6);
    }

    #[test]
    fn events_on_circle() {
        let rot = |_t: f64, x: &Vec2| Vec2::new(-x.y, x.x);
        let traj = flow(rot, Vec2::new(1.0, 0.0), 0.0, 2.0 * PI, &Settings::new(1e-12)).unwrap();
        let ev = find_event(&traj, |x| x[1], (0.0, 2.0 * PI));
        let interior: Vec<_> = ev.iter().filter(|e| e.t > 0.1 && e.t < 2.0 * PI - 0.1).collect();
        assert_eq!(interior.len(), 1);
        assert!((interior[0].t - PI).abs() < 1e-9);
        assert_eq!(interior[0].direction, Crossing::Falling);
        assert!(ev.len() <= 2);
        if ev.len() == 2 {
            assert_eq!(ev[1].direction, Crossing::Rising);
        }
        let none = find_event(&traj, |x| x[0] + 2.0, (0.0, 2.0 * PI));
        assert!(none.is_empty());
    }

    #[test]
    fn first_return_time_converges_to_period() {
        let traj = flow(hopf, Vec2::new(1.5, 0.0), 0.0, 12.0 * PI, &Settings::new(1e-11)).unwrap();
        let ev: Vec<_> = find_event(&traj, |x| x[1], (0.0, 12.0 * PI))
            .into_iter()
            .filter(|e| e.direction == Crossing::Rising && e.t > 1e-6)
            .collect();
        assert!(ev.len() >= 5);
        let ret = ev[4].t - ev[3].t;
        assert!((ret - 2.0 * PI).abs() < 1e-4, "return {ret}");
    }
}
