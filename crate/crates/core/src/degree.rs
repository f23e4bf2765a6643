//! Brouwer degree of the boundary field `F` on the region `U0` enclosed by
//! the cycle.
//!
//! On the cycle `F(x0(θ)) = f0(θ) ẋ0(θ) + f1(θ, θ) y1(θ)`. The degree is
//! `k · ind(x0, F)` with `k` the orientation of the cycle and `ind` the
//! winding number of `θ ↦ F(x0(θ))`.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bifurcation::{Bifurcation, BifurcationProfile};
use crate::integrate::{self, flow, IntegrateError, Settings, Trajectory};
use crate::linalg::{cross, perp, Vec2};
use crate::model::PlanarSystem;
use crate::quadrature::QuadError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DegreeError {
    #[error("field vanishes on the cycle near theta = {theta} (|F| = {norm:e}); degree undefined")]
    ZeroOnBoundary { theta: f64, norm: f64 },
    #[error("angle unwrapping did not resolve near theta = {theta}")]
    Unresolved { theta: f64 },
    #[error("consecutive samples turn by {angle} rad at index {index}; resample finer")]
    Undersampled { index: usize, angle: f64 },
    #[error("need at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
}

const MAX_TURN: f64 = 0.5 * std::f64::consts::PI;

/// Result of unwrapping the angle of a closed curve.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Winding {
    pub index: i64,
    /// `|total / 2π − index|`.
    pub residual: f64,
    pub min_norm: f64,
    pub samples: usize,
}

fn turn(a: &Vec2, b: &Vec2) -> f64 {
    cross(a, b).atan2(a.dot(b))
}

/// Winding number of a closed sample list (last point joins the first).
/// Every increment must stay below π/2.
pub fn winding_of_samples(samples: &[Vec2]) -> Result<Winding, DegreeError> {
    let n = samples.len();
    if n < 3 {
        return Err(DegreeError::TooFewSamples(n));
    }
    let mut min_norm = f64::INFINITY;
    for (i, s) in samples.iter().enumerate() {
        let r = s.norm();
        if !(r > 0.0) {
            return Err(DegreeError::ZeroOnBoundary { theta: i as f64, norm: r });
        }
        min_norm = min_norm.min(r);
    }
    let mut total = 0.0;
    for i in 0..n {
        let d = turn(&samples[i], &samples[(i + 1) % n]);
        if d.abs() >= MAX_TURN {
            return Err(DegreeError::Undersampled { index: i, angle: d });
        }
        total += d;
    }
    let w = total / std::f64::consts::TAU;
    Ok(Winding {
        index: w.round() as i64,
        residual: (w - w.round()).abs(),
        min_norm,
        samples: n,
    })
}

/// Winding number of `θ ↦ α(θ)` over one period, starting from an `n`-point
/// grid and bisecting every interval on which the angle turns by π/2 or more.
pub fn winding_index<F>(alpha: F, period: f64, n: usize) -> Result<Winding, DegreeError>
where
    F: Fn(f64) -> Result<Vec2, DegreeError> + Sync,
{
    let n = n.max(8);
    let mut thetas: Vec<f64> = (0..n).map(|k| period * k as f64 / n as f64).collect();
    let mut values: Vec<Vec2> = thetas.par_iter().map(|&t| alpha(t)).collect::<Result<_, _>>()?;
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.norm()));
    let floor = 1e-13 * scale;
    let check = |t: f64, v: &Vec2| -> Result<(), DegreeError> {
        if !(v.norm() > floor) {
            return Err(DegreeError::ZeroOnBoundary { theta: t, norm: v.norm() });
        }
        Ok(())
    };
    for (t, v) in thetas.iter().zip(&values) {
        check(*t, v)?;
    }
    loop {
        let m = thetas.len();
        let bad: Vec<usize> = (0..m)
            .filter(|&i| turn(&values[i], &values[(i + 1) % m]).abs() >= MAX_TURN)
            .collect();
        if bad.is_empty() {
            break;
        }
        let mids: Vec<f64> = bad
            .iter()
            .map(|&i| {
                let b = if i + 1 == m { period } else { thetas[i + 1] };
                0.5 * (thetas[i] + b)
            })
            .collect();
        for (&i, &t) in bad.iter().zip(&mids) {
            let b = if i + 1 == m { period } else { thetas[i + 1] };
            if b - thetas[i] < 1e-12 * period {
                // a quarter turn over a bracket this short means the curve
                // passes through the origin at quadrature resolution
                let j = (i + 1) % m;
                let norm = values[i].norm().min(values[j].norm());
                if norm <= 1e-6 * scale {
                    return Err(DegreeError::ZeroOnBoundary { theta: t, norm });
                }
                return Err(DegreeError::Unresolved { theta: t });
            }
        }
        let new: Vec<Vec2> = mids.par_iter().map(|&t| alpha(t)).collect::<Result<_, _>>()?;
        for (t, v) in mids.iter().zip(&new) {
            check(*t, v)?;
        }
        let mut merged: Vec<(f64, Vec2)> = thetas.into_iter().zip(values).collect();
        merged.extend(mids.into_iter().zip(new));
        merged.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        (thetas, values) = merged.into_iter().unzip();
    }
    winding_of_samples(&values)
}

/// `F(x0(θ)) = f0(θ) ẋ0(θ) + f1(θ, θ) y1(θ)`.
pub fn f_on_cycle(bif: &Bifurcation, theta: f64) -> Result<Vec2, QuadError> {
    let frame = bif.frame();
    let f0 = bif.try_f0(theta)?;
    let f1 = bif.try_f1(theta, theta)?;
    Ok(frame.xdot0(theta) * f0 + frame.y1(theta) * f1)
}

fn eta_difference(system: &PlanarSystem, base: &Trajectory, period: f64, s: f64, tol: f64) -> Result<Vec2, IntegrateError> {
    let rhs = |t: f64, q: &Vec2| {
        let x = base.at(t);
        system.jacobian(&x) * q + system.phi(t, &x, 0.0)
    };
    let settings = Settings::new(tol).with_breakpoints(system.kink_times(0.0, 0.0, period));
    let zero = Vec2::zeros();
    let at_t = if s < period {
        integrate::integrate(rhs, zero, s, period, &settings)?.end()
    } else {
        zero
    };
    let at_0 = if s > 0.0 {
        integrate::integrate(rhs, zero, s, 0.0, &settings)?.end()
    } else {
        zero
    };
    Ok(at_t - at_0)
}

fn base_flow(system: &PlanarSystem, xi: Vec2, period: f64, tol: f64) -> Result<Trajectory, IntegrateError> {
    let unforced = system.unforced();
    flow(|_, x| unforced.psi(x), xi, 0.0, period, &Settings::new(tol))
}

/// `F_s(ξ) = η(T, s, ξ) − η(0, s, ξ)` where `η(·, s, ξ)` solves the
/// inhomogeneous variational equation along the unperturbed orbit of `ξ`
/// with `η(s, s, ξ) = 0`. `s` must lie in `[0, T]`.
pub fn f_s_via_eta(system: &PlanarSystem, period: f64, xi: Vec2, s: f64, tol: f64) -> Result<Vec2, IntegrateError> {
    let system = system.bind_period(period);
    if system.forcing_is_zero() {
        return Ok(Vec2::zeros());
    }
    let base = base_flow(&system, xi, period, tol)?;
    eta_difference(&system, &base, period, s, tol)
}

/// `(θ, ind(θ, f), sign⟨z(θ)^⊥, F(q(θ))⟩)` at a zero of `f = ⟨z, F(q)⟩`.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct ZeroDatum {
    pub theta: f64,
    pub ind: i32,
    pub perp_sign: i32,
}

#[derive(Debug, Clone, Serialize, PartialEq, Error)]
pub enum Lemma5Violation {
    #[error("<z, q'> vanishes or changes sign near theta = {theta}")]
    Transversality { theta: f64 },
    #[error("expected exactly two zeros, found {0}")]
    ZeroCount(usize),
    #[error("f is not strictly monotone at its zero theta = {theta}")]
    NotMonotone { theta: f64 },
    #[error("F has the same side sign at both zeros")]
    SameSide,
}

/// Closed-form degree from the two-zero data:
/// `1 + (k/2) Σ ind(θi, f) · sign⟨z(θi)^⊥, F(q(θi))⟩`.
///
/// The bracket is taken for a positively oriented curve; `k = −1` reverses it.
pub fn lemma5_degree(orientation: i32, zeros: &[ZeroDatum]) -> Result<i64, Lemma5Violation> {
    if zeros.len() != 2 {
        return Err(Lemma5Violation::ZeroCount(zeros.len()));
    }
    for z in zeros {
        if z.ind == 0 {
            return Err(Lemma5Violation::NotMonotone { theta: z.theta });
        }
    }
    if zeros[0].perp_sign * zeros[1].perp_sign >= 0 {
        return Err(Lemma5Violation::SameSide);
    }
    let bracket: i32 = zeros.iter().map(|z| z.ind * z.perp_sign).sum();
    Ok(1 + (orientation * bracket / 2) as i64)
}

/// Zero data of `f(θ) = ⟨z(θ), F(θ)⟩` on an `n`-point grid with the
/// transversality check `⟨z, q̇⟩ ≠ 0` (constant sign).
pub fn lemma5_data<Z, Q, F>(z: Z, qdot: Q, field: F, period: f64, n: usize) -> Result<Vec<ZeroDatum>, Lemma5Violation>
where
    Z: Fn(f64) -> Vec2,
    Q: Fn(f64) -> Vec2,
    F: Fn(f64) -> Vec2,
{
    let grid: Vec<f64> = (0..n).map(|k| period * k as f64 / n as f64).collect();
    let tangency: Vec<f64> = grid.iter().map(|&t| z(t).dot(&qdot(t))).collect();
    let tmax = tangency.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for (t, v) in grid.iter().zip(&tangency) {
        if v * tangency[0] <= 0.0 || v.abs() < 1e-9 * tmax {
            return Err(Lemma5Violation::Transversality { theta: *t });
        }
    }
    let f = |t: f64| z(t).dot(&field(t));
    let h = period / n as f64;
    let mut ext = vec![-h];
    ext.extend(grid.iter().copied());
    ext.push(period);
    let fmax = ext.iter().fold(0.0f64, |a, &t| a.max(f(t).abs()));
    let mut out: Vec<ZeroDatum> = Vec::new();
    for e in integrate::scan_sign_changes(f, &ext) {
        let theta = e.t.rem_euclid(period);
        let theta = if period - theta < 1e-12 * period { 0.0 } else { theta };
        if out.iter().any(|d| {
            let g = (d.theta - theta).rem_euclid(period);
            g.min(period - g) < 1e-9 * period
        }) {
            continue;
        }
        let dh = h / 8.0;
        let slope = (f(theta + dh) - f(theta - dh)) / (2.0 * dh);
        let ind = if slope.abs() <= 1e-6 * fmax / period {
            0
        } else if slope > 0.0 {
            1
        } else {
            -1
        };
        let side = perp(&z(theta)).dot(&field(theta));
        out.push(ZeroDatum {
            theta,
            ind,
            perp_sign: if side > 0.0 {
                1
            } else if side < 0.0 {
                -1
            } else {
                0
            },
        });
    }
    out.sort_by(|a, b| a.theta.partial_cmp(&b.theta).unwrap());
    Ok(out)
}

/// Sign sampling of `s ↦ ⟨z1(θ0), F_s(x0(θ0))⟩` over one period.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct EtaCondition {
    pub theta0: f64,
    pub samples: usize,
    pub min_abs: f64,
    pub max_abs: f64,
    pub holds: bool,
    /// Largest relative deviation from `f1(θ0, θ0 + s)`.
    pub f1_deviation: f64,
}

pub fn check_eta_condition(bif: &Bifurcation, theta0: f64, samples: usize) -> Result<EtaCondition, DegreeError> {
    let frame = bif.frame();
    let period = bif.period();
    let tol = frame.tol();
    let base = base_flow(bif.system(), frame.x0(theta0), period, tol)?;
    let z1 = frame.z1(theta0);
    let rows: Vec<(f64, f64)> = (0..samples)
        .into_par_iter()
        .map(|j| {
            let s = period * j as f64 / samples as f64;
            let c = z1.dot(&eta_difference(bif.system(), &base, period, s, tol)?);
            let f1 = bif.try_f1(theta0, theta0 + s)?;
            Ok((c, f1))
        })
        .collect::<Result<_, DegreeError>>()?;
    let min_abs = rows.iter().fold(f64::INFINITY, |a, r| a.min(r.0.abs()));
    let max_abs = rows.iter().fold(0.0f64, |a, r| a.max(r.0.abs()));
    let first = rows[0].0.signum();
    let holds = rows.iter().all(|r| r.0.signum() == first && r.0 != 0.0);
    let f1_deviation = rows
        .iter()
        .map(|(c, f)| (c - f).abs() / f.abs().max(1e-300))
        .fold(0.0, f64::max);
    Ok(EtaCondition {
        theta0,
        samples,
        min_abs,
        max_abs,
        holds,
        f1_deviation,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DegreeReport {
    pub winding_index: i64,
    pub k: i32,
    #[serde(rename = "dB")]
    pub d_b: i64,
    pub winding_residual: f64,
    pub min_norm: f64,
    pub lemma5_value: Option<i64>,
    pub lemma5_note: Option<String>,
    pub lemma5_zeros: Vec<ZeroDatum>,
    pub eta_check_residual: f64,
    pub eta_check_scale: f64,
    /// `max |⟨z0(θ), F_s(x0(θ))⟩ − f0(θ)|` over the check points and two `s`.
    pub lemma4_residual: f64,
    pub eta_condition: Vec<EtaCondition>,
    pub psi_winding: i64,
    pub psi_degree: i64,
    pub pr1_all: bool,
    pub theorem3_applicable: bool,
    pub prediction: Option<String>,
    pub refinement_trace: Vec<usize>,
    pub grid_stable: bool,
}

/// Points `frac(j φ) T` of the golden-ratio sequence.
pub fn check_points(period: f64, n: usize) -> Vec<f64> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    (1..=n).map(|j| (j as f64 * g).fract() * period).collect()
}

/// Degree of `F` on `U0` with all cross-checks, and the verdict whether two
/// `T`-periodic solutions (one inside, one outside `U0`) are predicted.
pub fn assess_theorem3(bif: &Bifurcation, profile: &BifurcationProfile, grid: usize) -> Result<DegreeReport, DegreeError> {
    let frame = bif.frame();
    let cycle = frame.cycle();
    let period = bif.period();
    let k = cycle.orientation();
    let alpha = |t: f64| f_on_cycle(bif, t).map_err(DegreeError::from);

    let coarse = winding_index(alpha, period, grid)?;
    let fine = winding_index(alpha, period, 2 * grid)?;
    let refinement_trace = vec![grid, coarse.samples, 2 * grid, fine.samples];

    let psi = winding_index(|t| Ok(frame.system().psi(&cycle.at(t))), period, grid)?;

    let zeros = lemma5_data(|t| frame.z0(t), |t| frame.xdot0(t), |t| alpha(t).unwrap_or(Vec2::repeat(f64::NAN)), period, profile.grid);
    let (lemma5_value, lemma5_note, lemma5_zeros) = match zeros {
        Ok(z) => match lemma5_degree(k, &z) {
            Ok(v) => (Some(v), None, z),
            Err(e) => (None, Some(e.to_string()), z),
        },
        Err(e) => (None, Some(e.to_string()), Vec::new()),
    };

    let tol = frame.tol();
    let pts = check_points(period, 10);
    let rows: Vec<(f64, f64, f64)> = pts
        .par_iter()
        .map(|&t| {
            let xi = frame.x0(t);
            let direct = f_on_cycle(bif, t)?;
            let base = base_flow(bif.system(), xi, period, tol)?;
            let eta0 = eta_difference(bif.system(), &base, period, 0.0, tol)?;
            let eta1 = eta_difference(bif.system(), &base, period, period / 3.0, tol)?;
            let f0 = bif.try_f0(t)?;
            let z0 = frame.z0(t);
            let l4 = (z0.dot(&eta0) - f0).abs().max((z0.dot(&eta1) - f0).abs());
            Ok(((direct - eta0).norm(), direct.norm(), l4))
        })
        .collect::<Result<_, DegreeError>>()?;
    let eta_check_residual = rows.iter().fold(0.0f64, |a, r| a.max(r.0));
    let eta_check_scale = rows.iter().fold(0.0f64, |a, r| a.max(r.1));
    let lemma4_residual = rows.iter().fold(0.0f64, |a, r| a.max(r.2));

    let eta_condition = profile
        .zeros
        .iter()
        .map(|z| check_eta_condition(bif, z.theta, 64))
        .collect::<Result<Vec<_>, _>>()?;

    let d_b = k as i64 * coarse.index;
    let pr1_all = profile.pr1_all();
    let theorem3_applicable = d_b != 1 && pr1_all;
    Ok(DegreeReport {
        winding_index: coarse.index,
        k,
        d_b,
        winding_residual: coarse.residual.max(fine.residual),
        min_norm: coarse.min_norm,
        lemma5_value,
        lemma5_note,
        lemma5_zeros,
        eta_check_residual,
        eta_check_scale,
        lemma4_residual,
        eta_condition,
        psi_winding: psi.index,
        psi_degree: k as i64 * psi.index,
        pr1_all,
        theorem3_applicable,
        prediction: theorem3_applicable
            .then(|| "at least two T-periodic solutions: one inside U0, one outside".to_string()),
        refinement_trace,
        grid_stable: coarse.index == fine.index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycle::find_limit_cycle;
    use crate::floquet::FloquetFrame;
    use std::f64::consts::PI;

    fn polar(f: f64, g: f64, t: f64) -> Vec2 {
        // f e_t + g e_r on the unit circle
        Vec2::new(-f * t.sin() + g * t.cos(), f * t.cos() + g * t.sin())
    }

    #[test]
    fn winding_of_simple_curves() {
        let w = winding_index(|t| Ok(Vec2::new((2.0 * t).cos(), (2.0 * t).sin())), 2.0 * PI, 8).unwrap();
        assert_eq!(w.index, 2);
        assert!(w.residual < 1e-12);
        let w = winding_index(|_| Ok(Vec2::new(-1.0, 0.0)), 2.0 * PI, 8).unwrap();
        assert_eq!(w.index, 0);
        let w = winding_index(|t| Ok(Vec2::new((-3.0 * t).cos(), (-3.0 * t).sin()) * 1e-8), 2.0 * PI, 8).unwrap();
        assert_eq!(w.index, -3);
    }

    #[test]
    fn winding_reports_boundary_zero() {
        let e = winding_index(|t| Ok(Vec2::new(t.cos() - 1.0, t.sin())), 2.0 * PI, 64).unwrap_err();
        assert!(matches!(e, DegreeError::ZeroOnBoundary { theta, .. } if theta == 0.0));
        let e = winding_index(|_| Ok(Vec2::zeros()), 1.0, 16).unwrap_err();
        assert!(matches!(e, DegreeError::ZeroOnBoundary { .. }));
    }

    #[test]
    fn sample_list_must_be_resolved() {
        let oct: Vec<Vec2> = (0..8).map(|k| Vec2::new((PI * k as f64 / 4.0).cos(), (PI * k as f64 / 4.0).sin())).collect();
        assert_eq!(winding_of_samples(&oct).unwrap().index, 1);
        let scaled: Vec<Vec2> = oct.iter().map(|v| v * 1e6).collect();
        assert_eq!(winding_of_samples(&scaled).unwrap().index, 1);
        let sq = [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(-1.0, 0.0), Vec2::new(0.0, -1.0)];
        assert!(matches!(winding_of_samples(&sq), Err(DegreeError::Undersampled { .. })));
    }

    #[test]
    fn lemma5_on_synthetic_circle_fields() {
        let data = |g_sign: f64| {
            lemma5_data(
                |t: f64| Vec2::new(-t.sin(), t.cos()),
                |t: f64| Vec2::new(-t.sin(), t.cos()),
                move |t: f64| polar(t.sin(), g_sign * t.cos(), t),
                2.0 * PI,
                256,
            )
            .unwrap()
        };
        let d = data(1.0);
        assert_eq!(d.len(), 2);
        assert_eq!((d[0].ind, d[0].perp_sign, d[1].ind, d[1].perp_sign), (1, 1, -1, -1));
        assert_eq!(lemma5_degree(1, &d), Ok(2));
        let w = winding_index(|t| Ok(polar(t.sin(), t.cos(), t)), 2.0 * PI, 64).unwrap();
        assert_eq!(w.index, 2);
        let d = data(-1.0);
        assert_eq!(lemma5_degree(1, &d), Ok(0));
        let w = winding_index(|t| Ok(polar(t.sin(), -t.cos(), t)), 2.0 * PI, 64).unwrap();
        assert_eq!(w.index, 0);
    }

    #[test]
    fn lemma5_hypothesis_violations() {
        let z = |t: f64| ZeroDatum { theta: t, ind: 1, perp_sign: 1 };
        assert_eq!(lemma5_degree(1, &[z(0.0)]), Err(Lemma5Violation::ZeroCount(1)));
        assert_eq!(lemma5_degree(1, &[z(0.0), z(1.0)]), Err(Lemma5Violation::SameSide));
        let flat = ZeroDatum { theta: 1.0, ind: 0, perp_sign: -1 };
        assert!(matches!(lemma5_degree(1, &[z(0.0), flat]), Err(Lemma5Violation::NotMonotone { .. })));
        let e = lemma5_data(|_| Vec2::new(1.0, 0.0), |t: f64| Vec2::new(-t.sin(), t.cos()), |t| polar(t.sin(), 1.0, t), 2.0 * PI, 64);
        assert!(matches!(e, Err(Lemma5Violation::Transversality { .. })));
    }

    #[test]
    fn lemma5_orientation_reversal() {
        // the unit circle traversed clockwise, q(θ) = (cos θ, −sin θ)
        let q = |t: f64| Vec2::new(t.cos(), -t.sin());
        let qd = |t: f64| Vec2::new(-t.sin(), -t.cos());
        for g in [1.0, -1.0] {
            let field = move |t: f64| {
                let er = q(t);
                qd(t) * t.sin() + er * (g * t.cos())
            };
            let d = lemma5_data(qd, qd, field, 2.0 * PI, 256).unwrap();
            let w = winding_index(|t| Ok(field(t)), 2.0 * PI, 64).unwrap();
            assert_eq!(lemma5_degree(-1, &d).unwrap(), -w.index);
        }
    }

    fn hopf_rot_bif() -> Bifurcation {
        let sys = PlanarSystem::hopf_rot();
        let c = find_limit_cycle(&sys, Vec2::new(1.3, 0.0), None, 1e-13).unwrap();
        let f = FloquetFrame::build(&sys, &c, 1024, 1e-13).unwrap();
        Bifurcation::new(&f, &sys)
    }

    #[test]
    fn hopf_rot_field_on_cycle() {
        let b = hopf_rot_bif();
        let q = (-4.0 * PI).exp();
        let f = f_on_cycle(&b, 0.0).unwrap();
        assert!((f - Vec2::new(0.5 * (1.0 - q), 0.0)).norm() < 1e-6);
        let f = f_on_cycle(&b, 0.5 * PI).unwrap();
        assert!((f - Vec2::new(2.0 * PI, 0.0)).norm() < 1e-5);
        let t = 0.9;
        let eta = f_s_via_eta(b.system(), b.period(), b.frame().x0(t), 0.0, 1e-12).unwrap();
        assert!((eta - f_on_cycle(&b, t).unwrap()).norm() < 1e-6);
        let zero = f_s_via_eta(&PlanarSystem::hopf(), 2.0 * PI, Vec2::new(0.3, 2.0), 1.0, 1e-10).unwrap();
        assert_eq!(zero, Vec2::zeros());
    }

    #[test]
    fn hopf_rot_assessment() {
        let b = hopf_rot_bif();
        let p = b.profile(128).unwrap();
        let r = assess_theorem3(&b, &p, 128).unwrap();
        assert_eq!(r.k, 1);
        assert_eq!(r.winding_index, 0);
        assert_eq!(r.d_b, 0);
        assert_eq!(r.lemma5_value, Some(0));
        let z = &r.lemma5_zeros;
        assert_eq!((z[0].ind, z[0].perp_sign, z[1].ind, z[1].perp_sign), (-1, 1, 1, -1));
        assert_eq!(r.psi_degree, 1);
        assert!(r.theorem3_applicable && r.grid_stable);
        assert!(r.eta_check_residual < 1e-6 * (1.0 + r.eta_check_scale), "{r:?}");
        assert!(r.lemma4_residual < 1e-7, "{}", r.lemma4_residual);
        assert!(r.eta_condition.iter().all(|c| c.holds && c.f1_deviation < 1e-6), "{:?}", r.eta_condition);
    }
}
