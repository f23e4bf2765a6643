use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cyclepersist_core::bifurcation::Bifurcation;
use cyclepersist_core::cycle::find_limit_cycle;
use cyclepersist_core::degree::{assess_theorem3, winding_index};
use cyclepersist_core::floquet::FloquetFrame;
use cyclepersist_core::persist::{find_periodic_solutions, poincare_map, PersistOptions};
use cyclepersist_core::{PlanarSystem, Vec2};

fn hopf_rot_bif() -> Bifurcation {
    let sys = PlanarSystem::hopf_rot();
    let c = find_limit_cycle(&sys, Vec2::new(1.3, 0.0), None, 1e-13).unwrap();
    let f = FloquetFrame::build(&sys, &c, 1024, 1e-13).unwrap();
    Bifurcation::new(&f, &sys)
}

fn cycle_and_frame(c: &mut Criterion) {
    let mut group = c.benchmark_group("cycle");
    for (name, sys, seed) in [
        ("hopf", PlanarSystem::hopf(), Vec2::new(1.3, 0.0)),
        ("vdp", PlanarSystem::vdp(), Vec2::new(2.0, 0.0)),
    ] {
        group.bench_with_input(BenchmarkId::new("shooting", name), &sys, |b, sys| {
            b.iter(|| find_limit_cycle(sys, seed, None, 1e-13).unwrap())
        });
        let cycle = find_limit_cycle(&sys, seed, None, 1e-13).unwrap();
        group.bench_with_input(BenchmarkId::new("frame", name), &sys, |b, sys| {
            b.iter(|| FloquetFrame::build(sys, &cycle, 1024, 1e-13).unwrap())
        });
    }
    group.finish();
}

fn bifurcation(c: &mut Criterion) {
    let bif = hopf_rot_bif();
    let mut group = c.benchmark_group("bifurcation");
    group.bench_function("f0", |b| b.iter(|| bif.f0(0.7)));
    group.bench_function("f1", |b| b.iter(|| bif.f1(0.7, 2.1)));
    for m in [128usize, 256] {
        group.bench_with_input(BenchmarkId::new("profile", m), &m, |b, &m| b.iter(|| bif.profile(m).unwrap()));
    }
    group.finish();
}

fn degree(c: &mut Criterion) {
    let bif = hopf_rot_bif();
    let profile = bif.profile(128).unwrap();
    let mut group = c.benchmark_group("degree");
    group.bench_function("winding_circle_1024", |b| {
        b.iter(|| winding_index(|t| Ok(Vec2::new(t.cos(), t.sin())), 2.0 * std::f64::consts::PI, 1024).unwrap())
    });
    group.sample_size(10);
    group.bench_function("assess_hopf_rot", |b| b.iter(|| assess_theorem3(&bif, &profile, 128).unwrap()));
    group.finish();
}

fn persistence(c: &mut Criterion) {
    let bif = hopf_rot_bif();
    let profile = bif.profile(128).unwrap();
    let sys = PlanarSystem::hopf_rot();
    let mut group = c.benchmark_group("persist");
    group.bench_function("poincare_map", |b| {
        b.iter(|| poincare_map(&sys, Vec2::new(1.005, 0.0), 0.01, 2.0 * std::f64::consts::PI, 1e-12).unwrap())
    });
    group.sample_size(10).measurement_time(Duration::from_secs(8));
    group.bench_function("two_solutions_eps_0.01", |b| {
        b.iter(|| find_periodic_solutions(&bif, &profile, 0.01, &PersistOptions::default()).unwrap())
    });
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().warm_up_time(Duration::from_secs(1));
    targets = cycle_and_frame, bifurcation, degree, persistence
}
criterion_main!(benches);
