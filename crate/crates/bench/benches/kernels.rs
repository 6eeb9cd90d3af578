use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nsoc_core::instances::{disk_mesh, disk_state, sine_bump, zero_target};
use nsoc_core::sampling::{rng, scaled, smooth_field};
use nsoc_core::{
    assemble, build_mesh, default_sequence_bank, eval_q, level_band_measure, make_stationary_point, solve_state,
    CurvatureOptions, DomainKind, FemSpace, Role, ScalarField, SolverOptions,
};

fn assembly(c: &mut Criterion) {
    let mut g = c.benchmark_group("assemble");
    for res in [32, 64, 128] {
        let mesh = build_mesh(DomainKind::UnitSquare, res).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(res), &mesh, |b, m| b.iter(|| assemble(black_box(m)).unwrap()));
    }
    g.finish();
}

fn state_solve(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve_state");
    for res in [32, 64] {
        let space = FemSpace::new(build_mesh(DomainKind::UnitSquare, res).unwrap()).unwrap();
        let u = scaled(&smooth_field(space.mesh(), &mut rng(1), 3), 20.0);
        let opts = SolverOptions::default();
        g.bench_with_input(BenchmarkId::from_parameter(res), &u, |b, u| {
            b.iter(|| solve_state(&space, black_box(u), &opts, None).unwrap())
        });
    }
    g.finish();
}

fn band_measure(c: &mut Criterion) {
    let mesh = disk_mesh(96).unwrap();
    let y = disk_state(&mesh);
    c.bench_function("level_band_measure/disk96", |b| b.iter(|| level_band_measure(&mesh, black_box(&y), 1e-2)));
}

fn curvature(c: &mut Criterion) {
    let p = zero_target(DomainKind::UnitSquare, 32, 1.0).unwrap();
    let sp = make_stationary_point(&p, &vec![0.0; p.n()]).unwrap();
    let h = ScalarField::interpolate(p.space.mesh(), Role::Direction, sine_bump);
    let bank = default_sequence_bank();
    let opts = CurvatureOptions::default();
    c.bench_function("eval_q/square32", |b| b.iter(|| eval_q(&p, &sp, black_box(&h), &bank, &opts).unwrap()));
}

criterion_group!(benches, assembly, state_solve, band_measure, curvature);
criterion_main!(benches);
