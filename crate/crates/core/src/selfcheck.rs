//! The oracle suite behind `cyclepersist selfcheck`.
//!
//! Every criterion rebuilds what it needs from scratch so that criteria can be
//! run and reported independently. Wall-clock limits are reported only as
//! pass/fail so that the rendered table stays byte-stable between runs.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bifurcation::{Bifurcation, BifurcationProfile};
use crate::cycle::find_limit_cycle;
use crate::degree::{assess_theorem3, lemma5_data, lemma5_degree, winding_index};
use crate::floquet::{longtime_adjoint_extract, FloquetFrame};
use crate::linalg::perp;
use crate::model::AnalysisSettings;
use crate::persist::{corollary1_probe, find_periodic_solutions, orbit_separation, persistence_run, Location, PersistOptions};
use crate::pipeline::analyze;
use crate::{PlanarSystem, Vec2};

/// Integration tolerance every criterion starts from, before `tol_scale`.
pub const BASE_TOL: f64 = 1e-13;
pub const CRITERIA: [u8; 7] = [1, 2, 3, 4, 5, 6, 7];
const SEED: u64 = 0x5eed_c7c1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelfcheckOptions {
    /// Multiplies every integration and quadrature tolerance.
    pub tol_scale: f64,
}

impl Default for SelfcheckOptions {
    fn default() -> Self {
        Self { tol_scale: 1.0 }
    }
}

impl SelfcheckOptions {
    fn tol(&self, base: f64) -> f64 {
        base * self.tol_scale
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: String,
    pub target: String,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            measured: format!("{value:.3e}"),
            target: format!("<= {bound:.1e}"),
            pass: value <= bound,
        }
    }

    fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            measured: format!("{value:.3e}"),
            target: format!(">= {bound:.3e}"),
            pass: value >= bound,
        }
    }

    fn between(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            measured: format!("{value:.3e}"),
            target: format!("[{lo}, {hi}]"),
            pass: value >= lo && value <= hi,
        }
    }

    fn equals(name: &str, got: i64, want: i64) -> Self {
        Self {
            name: name.into(),
            measured: got.to_string(),
            target: format!("= {want}"),
            pass: got == want,
        }
    }

    fn flag(name: &str, ok: bool) -> Self {
        Self {
            name: name.into(),
            measured: if ok { "yes" } else { "no" }.into(),
            target: "yes".into(),
            pass: ok,
        }
    }

    fn runtime(name: &str, elapsed: Duration, limit: Duration) -> Self {
        let ok = elapsed < limit;
        Self {
            name: name.into(),
            measured: if ok { format!("< {limit:?}") } else { format!(">= {limit:?}") },
            target: format!("< {limit:?}"),
            pass: ok,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub title: String,
    pub checks: Vec<Check>,
    pub error: Option<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfcheckReport {
    pub options: SelfcheckOptions,
    pub criteria: Vec<CriterionReport>,
    pub pass: bool,
}

pub fn title(id: u8) -> &'static str {
    match id {
        1 => "limit cycle",
        2 => "Floquet frame",
        3 => "bifurcation functions",
        4 => "degree",
        5 => "two periodic solutions",
        6 => "distance profile",
        7 => "van der Pol regression",
        _ => "unknown",
    }
}

pub fn criterion(id: u8, opts: &SelfcheckOptions) -> CriterionReport {
    let result = match id {
        1 => c1_cycle(opts),
        2 => c2_floquet(opts),
        3 => c3_bifurcation(opts),
        4 => c4_degree(opts),
        5 => c5_persistence(opts),
        6 => c6_profile(opts),
        7 => c7_vdp(opts),
        _ => Err(format!("no criterion {id}")),
    };
    let (checks, error) = match result {
        Ok(c) => (c, None),
        Err(e) => (Vec::new(), Some(e)),
    };
    let pass = error.is_none() && !checks.is_empty() && checks.iter().all(|c| c.pass);
    CriterionReport {
        id,
        title: title(id).into(),
        checks,
        error,
        pass,
    }
}

pub fn run(opts: &SelfcheckOptions) -> SelfcheckReport {
    let criteria: Vec<CriterionReport> = CRITERIA.iter().map(|&id| criterion(id, opts)).collect();
    let pass = criteria.iter().all(|c| c.pass);
    SelfcheckReport {
        options: *opts,
        criteria,
        pass,
    }
}

pub fn render_criterion(out: &mut String, c: &CriterionReport) {
    let verdict = if c.pass { "PASS" } else { "FAIL" };
    let _ = writeln!(out, "C{} {} {}", c.id, c.title, verdict);
    for k in &c.checks {
        let _ = writeln!(
            out,
            "    {:<4} {:<52} {:>12}  {}",
            if k.pass { "ok" } else { "FAIL" },
            k.name,
            k.measured,
            k.target
        );
    }
    if let Some(e) = &c.error {
        let _ = writeln!(out, "    FAIL {e}");
    }
}

pub fn render_table(report: &SelfcheckReport) -> String {
    let mut out = String::new();
    for c in &report.criteria {
        render_criterion(&mut out, c);
    }
    let passed = report.criteria.iter().filter(|c| c.pass).count();
    let _ = writeln!(out, "{passed}/{} criteria passed", report.criteria.len());
    out
}

fn hopf_seed() -> Vec2 {
    Vec2::new(1.3, 0.0)
}

fn circular(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

/// Root of `r³ − r = c` near 1.
pub fn cubic_radius(c: f64) -> f64 {
    let mut r = 1.0;
    for _ in 0..60 {
        r -= (r * r * r - r - c) / (3.0 * r * r - 1.0);
    }
    r
}

fn setup(system: &PlanarSystem, seed: Vec2, tol: f64, grid: usize) -> Result<(Bifurcation, BifurcationProfile), String> {
    let cycle = find_limit_cycle(system, seed, None, tol).map_err(|e| e.to_string())?;
    let frame = FloquetFrame::build(system, &cycle, 1024, tol).map_err(|e| e.to_string())?;
    let bif = Bifurcation::new(&frame, system);
    let profile = bif.profile(grid).map_err(|e| e.to_string())?;
    Ok((bif, profile))
}

/// `(cos t, sin t) + 2 sin 2t · x` on the Hopf field: `f0 = −2π sin θ` as for
/// the rotating forcing, but `f1(θ0, ·)` vanishes somewhere at both zeros.
pub fn pr1_failing_system() -> PlanarSystem {
    PlanarSystem::hopf()
        .with_forcing(|t, x: &Vec2, _| Vec2::new(t.cos(), t.sin()) + x * (2.0 * (2.0 * t).sin()))
        .with_name("hopf_pr1_fail")
}

pub fn cos_forcing_system() -> PlanarSystem {
    PlanarSystem::hopf()
        .with_forcing(|t, _x, _| Vec2::new(t.cos(), 0.0))
        .with_name("hopf_cos")
}

fn c1_cycle(opts: &SelfcheckOptions) -> Result<Vec<Check>, String> {
    let start = Instant::now();
    let cycle = find_limit_cycle(&PlanarSystem::hopf(), hopf_seed(), None, opts.tol(BASE_TOL)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let sup = cycle
        .sample(4096)
        .iter()
        .fold(0.0f64, |a, p| a.max((p.norm() - 1.0).abs()));
    Ok(vec![
        Check::at_most("|T - 2pi|", (cycle.period() - 2.0 * PI).abs(), 1e-8),
        Check::at_most("sup | |x0(t)| - 1 | over 4096 samples", sup, 1e-7),
        Check::runtime("cycle runtime", elapsed, Duration::from_secs(1)),
    ])
}

fn c2_floquet(opts: &SelfcheckOptions) -> Result<Vec<Check>, String> {
    let sys = PlanarSystem::hopf();
    let tol = opts.tol(BASE_TOL);
    let cycle = find_limit_cycle(&sys, hopf_seed(), None, tol).map_err(|e| e.to_string())?;
    let f = FloquetFrame::build(&sys, &cycle, 1024, tol).map_err(|e| e.to_string())?;
    let d = f.diagnostics();
    let rho = (-4.0 * PI).exp();
    let mut worst = 0.0f64;
    for t in f.grid() {
        let er = Vec2::new(t.cos(), t.sin());
        let et = Vec2::new(-er.y, er.x);
        worst = worst
            .max((f.y1(t) - er * (-2.0 * t).exp()).norm())
            .max((f.z0(t) - et).norm())
            .max((f.z1(t) * (-2.0 * t).exp() - er).norm());
    }
    let long = longtime_adjoint_extract(&f, 3, None).map_err(|e| e.to_string())?;
    Ok(vec![
        Check::at_most("rho vs exp(-4pi), relative", (f.rho() / rho - 1.0).abs(), 1e-5),
        Check::at_most("rho* vs exp(4pi), relative", (f.rho_star() * rho - 1.0).abs(), 1e-5),
        Check::at_most("|trivial multiplier - 1|", (f.trivial_multiplier() - 1.0).abs(), 1e-7),
        Check::at_most("Liouville identity, relative", d.liouville_rel, 1e-7),
        Check::at_most("lemma1 deviation from identity", d.lemma1_max, 1e-7),
        Check::at_most("frame curves vs closed forms", worst, 1e-6),
        Check::at_most("long-time z0 extraction (k = 3)", long.deviation, 1e-4),
    ])
}

fn c3_bifurcation(opts: &SelfcheckOptions) -> Result<Vec<Check>, String> {
    let tol = opts.tol(BASE_TOL);
    let (bif, profile) = setup(&PlanarSystem::hopf_rot(), hopf_seed(), tol, 256)?;
    let period = bif.period();
    let f0_err = profile
        .theta_grid
        .iter()
        .zip(&profile.f0_values)
        .fold(0.0f64, |a, (&t, &v)| a.max((v + 2.0 * PI * t.sin()).abs()));
    let mut checks = vec![
        Check::at_most("f0 vs -2pi sin(theta) on 256 points", f0_err, 1e-6),
        Check::equals("number of simple zeros of f0", profile.zeros.len() as i64, 2),
    ];
    for (at, slope) in [(0.0, -2.0 * PI), (PI, 2.0 * PI)] {
        let z = profile
            .zeros
            .iter()
            .min_by(|a, b| circular(a.theta, at, period).total_cmp(&circular(b.theta, at, period)))
            .ok_or("f0 has no zeros")?;
        checks.push(Check::at_most(&format!("zero near {at:.4}: position"), circular(z.theta, at, period), 1e-8));
        checks.push(Check::at_most(&format!("zero near {at:.4}: slope error"), (z.slope - slope).abs(), 1e-3));
    }
    let f100 = bif.try_f1(0.0, 0.0).map_err(|e| e.to_string())?;
    checks.push(Check::at_most("|f1(0,0) - 0.4999983|", (f100 - 0.4999983).abs(), 1e-6));

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    let mut accepted = 0;
    for _ in 0..400 {
        if accepted == 20 {
            break;
        }
        let theta = rng.random_range(0.0..period);
        let s = rng.random_range(-0.5 * period..0.5 * period);
        let a = bif.try_f1(theta, s).map_err(|e| e.to_string())?;
        if a.abs() < 1e-3 {
            continue;
        }
        let b = bif.try_f1(theta, s + period).map_err(|e| e.to_string())?;
        worst = worst.max((b / a / bif.frame().rho_star() - 1.0).abs());
        accepted += 1;
    }
    checks.push(Check::equals("random f1 period probes", accepted, 20));
    checks.push(Check::at_most("f1(theta, s+T)/f1(theta, s) vs rho*, relative", worst, 1e-6));

    let (fail_bif, _) = setup(&pr1_failing_system(), hopf_seed(), tol, 256)?;
    let fail = fail_bif.check_pr1(0.0).map_err(|e| e.to_string())?;
    checks.push(Check::flag("pr1 failure detected (sin 2t . x forcing, theta0 = 0)", !fail.holds));
    let (cos_bif, _) = setup(&cos_forcing_system(), hopf_seed(), tol, 256)?;
    let cos = cos_bif.check_pr1(0.0).map_err(|e| e.to_string())?;
    let q = cos_bif.frame().rho();
    checks.push(Check::at_most(
        "(cos t, 0): pr1 margin vs 3(1-rho)/8",
        (cos.margin - 0.375 * (1.0 - q)).abs(),
        1e-6,
    ));
    checks.push(Check::flag("(cos t, 0): pr1 verdict matches margin > 0", cos.holds));
    Ok(checks)
}

/// A boundary field on the unit circle `q(θ) = (cos θ, k sin θ)` with
/// prescribed `⟨z, F⟩ = f` and `⟨z^⊥, F⟩ = g`, where `f` has exactly two
/// simple zeros and `g` takes opposite signs there.
#[derive(Debug, Clone, Copy)]
struct SyntheticField {
    k: i32,
    c: f64,
    delta: f64,
    m: f64,
    s: f64,
    p: [f64; 5],
    w: [f64; 3],
}

impl SyntheticField {
    fn random(rng: &mut ChaCha8Rng, symmetric: bool) -> Self {
        let signed = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| {
            let v = rng.random_range(lo..hi);
            if rng.random_bool(0.5) {
                v
            } else {
                -v
            }
        };
        let k = if rng.random_bool(0.5) { 1 } else { -1 };
        let c = rng.random_range(0.0..2.0 * PI);
        let delta = if symmetric { 0.5 * PI } else { rng.random_range(0.3..2.8) };
        let m = signed(rng, 0.2, 3.0);
        let s = signed(rng, 0.2, 3.0);
        let mut p = [0.0; 5];
        for v in p.iter_mut() {
            *v = rng.random_range(-2.0..2.0);
        }
        let mut w = [0.0; 3];
        for v in w.iter_mut() {
            *v = rng.random_range(-0.8..0.8);
        }
        if symmetric {
            // odd harmonics only in g, even only in the transversal's tilt
            p[1] = 0.0;
            p[2] = 0.0;
            w[1] = 0.0;
        }
        Self { k, c, delta, m, s, p, w }
    }

    fn q(&self, t: f64) -> Vec2 {
        Vec2::new(t.cos(), self.k as f64 * t.sin())
    }

    fn qdot(&self, t: f64) -> Vec2 {
        Vec2::new(-t.sin(), self.k as f64 * t.cos())
    }

    fn z(&self, t: f64) -> Vec2 {
        let w = self.w[0] + self.w[1] * t.cos() + self.w[2] * (2.0 * t).sin();
        self.qdot(t) + self.q(t) * w
    }

    fn field(&self, t: f64) -> Vec2 {
        let u = t - self.c;
        let f = self.m * (self.delta.cos() - u.cos());
        let p = self.p[0] + self.p[1] * t.cos() + self.p[2] * t.sin() + self.p[3] * (2.0 * t).cos() + self.p[4] * (2.0 * t).sin();
        let g = self.s * u.sin() + (u.cos() - self.delta.cos()) * p;
        let z = self.z(t);
        (z * f + perp(&z) * g) / z.norm_squared()
    }

    /// `(degree from the zeros of f0, degree from the winding of F along the positively
    /// oriented curve)`.
    fn degrees(&self) -> Result<(i64, i64), String> {
        let data = lemma5_data(|t| self.z(t), |t| self.qdot(t), |t| self.field(t), 2.0 * PI, 512).map_err(|e| e.to_string())?;
        let l5 = lemma5_degree(self.k, &data).map_err(|e| e.to_string())?;
        let w = winding_index(|t| Ok(self.field(t)), 2.0 * PI, 256).map_err(|e| e.to_string())?;
        Ok((l5, self.k as i64 * w.index))
    }
}

fn psi_degree(system: &PlanarSystem, seed: Vec2, tol: f64) -> Result<i64, String> {
    let cycle = find_limit_cycle(system, seed, None, tol).map_err(|e| e.to_string())?;
    let w = winding_index(|t| Ok(system.psi(&cycle.at(t))), cycle.period(), 256).map_err(|e| e.to_string())?;
    Ok(cycle.orientation() as i64 * w.index)
}

fn c4_degree(opts: &SelfcheckOptions) -> Result<Vec<Check>, String> {
    let tol = opts.tol(BASE_TOL);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x4);
    let mut agree = 0;
    let mut symmetric_ok = 0;
    for _ in 0..24 {
        let (l5, d) = SyntheticField::random(&mut rng, false).degrees()?;
        agree += (l5 == d) as i64;
    }
    for _ in 0..24 {
        let (l5, d) = SyntheticField::random(&mut rng, true).degrees()?;
        symmetric_ok += (l5 == d && (d == 0 || d == 2)) as i64;
    }
    let (bif, profile) = setup(&PlanarSystem::hopf_rot(), hopf_seed(), tol, 256)?;
    let report = assess_theorem3(&bif, &profile, 256).map_err(|e| e.to_string())?;
    Ok(vec![
        Check::equals("random fields: zero-count degree = winding (of 24)", agree, 24),
        Check::equals("antiperiodic fields: degree in {0,2} (of 24)", symmetric_ok, 24),
        Check::equals("hopf_rot dB by winding", report.d_b, 0),
        Check::equals("hopf_rot dB from the zeros of f0", report.lemma5_value.unwrap_or(i64::MIN), 0),
        Check::equals("d_B(psi, U0) for hopf", psi_degree(&PlanarSystem::hopf(), hopf_seed(), tol)?, 1),
        Check::equals("d_B(psi, U0) for vdp", psi_degree(&PlanarSystem::vdp(), Vec2::new(2.0, 0.0), tol)?, 1),
        Check::at_most("F on the cycle vs eta route, 10 points", report.eta_check_residual, 1e-6),
    ])
}

fn persist_options(opts: &SelfcheckOptions) -> PersistOptions {
    PersistOptions {
        tol: opts.tol(1e-12),
        ..PersistOptions::default()
    }
}

fn c5_persistence(opts: &SelfcheckOptions) -> Result<Vec<Check>, String> {
    let start = Instant::now();
    let eps = 0.01;
    let (bif, profile) = setup(&PlanarSystem::hopf_rot(), hopf_seed(), opts.tol(BASE_TOL), 256)?;
    let (sols, _) = find_periodic_solutions(&bif, &profile, eps, &persist_options(opts)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let mut checks = vec![Check::equals("number of 2pi-periodic solutions", sols.len() as i64, 2)];
    let residual = sols.iter().fold(0.0f64, |a, s| a.max(s.fixed_point_residual));
    checks.push(Check::at_most("fixed-point residual", residual, 1e-10));
    for (loc, radius, phase) in [(Location::Outside, 1.004963, 0.0), (Location::Inside, 0.994962, PI)] {
        let name = format!("{loc:?}").to_lowercase();
        let Some(sol) = sols.iter().find(|s| s.location == loc) else {
            checks.push(Check::flag(&format!("{name} solution found"), false));
            continue;
        };
        let dev = sol
            .samples(256)
            .iter()
            .fold(0.0f64, |a, p| a.max((p.norm() - radius).abs()));
        checks.push(Check::at_most(&format!("{name}: radius vs {radius}"), dev, 1e-5));
        checks.push(Check::at_most(&format!("{name}: phase vs {phase:.4}"), circular(sol.phase, phase, 2.0 * PI), 1e-3));
    }
    if sols.len() == 2 {
        checks.push(Check::at_least("orbit separation", orbit_separation(&sols[0], &sols[1]), eps / 4.0));
    }
    checks.push(Check::runtime("persistence runtime", elapsed, Duration::from_secs(10)));
    Ok(checks)
}

fn c6_profile(opts: &SelfcheckOptions) -> Result<Vec<Check>, String> {
    let tol = opts.tol(BASE_TOL);
    let popts = persist_options(opts);
    let eps_grid = [0.02, 0.01, 0.005, 0.0025];
    let (bif, profile) = setup(&PlanarSystem::hopf_rot(), hopf_seed(), tol, 256)?;
    let run = persistence_run(&bif, &profile, &eps_grid, &popts);
    let mut checks = Vec::new();
    for r in &run.results {
        if let Some(e) = &r.error {
            return Err(format!("eps = {}: {e}", r.eps));
        }
    }
    checks.push(Check::equals("convergence fits", run.convergence.len() as i64, 2));
    for fit in &run.convergence {
        checks.push(Check::equals(&format!("theta0 = {:.4}: eps values fitted", fit.theta0), fit.points.len() as i64, 4));
        checks.push(Check::between(
            &format!("theta0 = {:.4}: slope of max|dist - eps/2|", fit.theta0),
            fit.slope.unwrap_or(f64::NAN),
            1.7,
            2.3,
        ));
    }

    let mut brackets: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
    let mut positive = true;
    for r in &run.results {
        for s in &r.solutions {
            let (Some(theta0), Some(p)) = (s.theta0, &s.profile) else {
                positive = false;
                continue;
            };
            positive &= p.failures.is_empty() && p.ratio_min > 0.0 && p.ratio_max.is_finite();
            match brackets.iter_mut().find(|b| (b.0 - theta0).abs() < 1e-6) {
                Some(b) => b.1.push((p.ratio_min, p.ratio_max)),
                None => brackets.push((theta0, vec![(p.ratio_min, p.ratio_max)])),
            }
        }
    }
    checks.push(Check::flag("R(t) positive and finite for every eps and t", positive));
    let drift = brackets
        .iter()
        .flat_map(|b| b.1.windows(2).map(|w| ((w[1].0 / w[0].0) - 1.0).abs().max(((w[1].1 / w[0].1) - 1.0).abs())))
        .fold(0.0f64, f64::max);
    checks.push(Check::at_most("R bracket change per eps halving", drift, 0.2));

    let (cbif, cprofile) = setup(&pr1_failing_system(), hopf_seed(), tol, 256)?;
    for z in &cprofile.zeros {
        let probe = corollary1_probe(&cbif, &cprofile, z.theta, 0.01, &popts).map_err(|e| e.to_string())?;
        checks.push(Check::at_most(
            &format!("theta0 = {:.4}: dist(t*)/eps ratio per halving", z.theta),
            probe.ratio,
            0.7,
        ));
    }

    let at = run
        .results
        .iter()
        .find(|r| r.eps == 0.01)
        .ok_or("no eps = 0.01 result")?;
    for s in &at.solutions {
        let c2 = s.corollary2.ok_or("missing orbit-to-cycle distance")?;
        let name = format!("{:?}", s.location).to_lowercase();
        checks.push(Check::at_least(&format!("{name}: min distance to cycle"), c2.min_distance, 0.01 / 4.0));
    }
    Ok(checks)
}

fn c7_vdp(opts: &SelfcheckOptions) -> Result<Vec<Check>, String> {
    let sys = PlanarSystem::vdp();
    let settings = AnalysisSettings {
        seed: [2.0, 0.0],
        tol: opts.tol(2.0 * BASE_TOL),
        frame_grid: 1024,
        theta_grid: 256,
        degree_grid: 256,
        ..AnalysisSettings::default()
    };
    let a = analyze(&sys, &settings).map_err(|e| e.to_string())?;
    let fine = AnalysisSettings {
        tol: 0.5 * settings.tol,
        degree_grid: 2 * settings.degree_grid,
        ..settings.clone()
    };
    let b = analyze(&sys, &fine).map_err(|e| e.to_string())?;
    let d = a.frame.diagnostics();
    Ok(vec![
        Check::at_most("lemma1 deviation from identity", d.lemma1_max, 1e-7),
        Check::at_most("Liouville identity, relative", d.liouville_rel, 1e-7),
        Check::at_most("|rho rho* - 1|", d.rho_rho_star_defect, 1e-7),
        Check::flag("winding stable under grid doubling", a.degree.grid_stable && b.degree.grid_stable),
        Check::equals("dB at halved tolerance and doubled grid", b.degree.d_b, a.degree.d_b),
        Check::equals("d_B(psi, U0)", a.degree.psi_degree, 1),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_oracle() {
        assert!((cubic_radius(0.01) - 1.004963).abs() < 5e-7);
        assert!((cubic_radius(-0.01) - 0.994962).abs() < 5e-7);
    }

    #[test]
    fn synthetic_fields_meet_their_construction() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for symmetric in [false, true] {
            for _ in 0..8 {
                let sf = SyntheticField::random(&mut rng, symmetric);
                for j in 0..64 {
                    let t = 2.0 * PI * j as f64 / 64.0;
                    assert!(sf.z(t).dot(&sf.qdot(t)) > 0.0);
                    let f = sf.m * (sf.delta.cos() - (t - sf.c).cos());
                    assert!((sf.z(t).dot(&sf.field(t)) - f).abs() < 1e-12);
                }
                let (l5, d) = sf.degrees().unwrap();
                assert_eq!(l5, d, "{sf:?}");
                assert!(d == 0 || d == 2);
            }
        }
    }

    #[test]
    fn table_layout() {
        let c = CriterionReport {
            id: 9,
            title: "demo".into(),
            checks: vec![Check::at_most("x", 0.5, 1.0), Check::equals("n", 1, 2)],
            error: None,
            pass: false,
        };
        let mut s = String::new();
        render_criterion(&mut s, &c);
        assert!(s.starts_with("C9 demo FAIL\n"));
        assert!(s.contains("5.000e-1"));
        assert_eq!(s.lines().count(), 3);
    }

    #[test]
    fn fast_criteria_pass() {
        let opts = SelfcheckOptions::default();
        for id in [1, 2] {
            let c = criterion(id, &opts);
            assert!(c.pass, "{c:?}");
        }
    }

    #[test]
    fn inflated_tolerance_fails_lemma1() {
        let c = criterion(2, &SelfcheckOptions { tol_scale: 1e3 });
        assert!(!c.pass);
        let l1 = c.checks.iter().find(|k| k.name.starts_with("lemma1")).unwrap();
        assert!(!l1.pass, "{l1:?}");
    }
}
