use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use scbf_bench::bench_field;
use scbf_core::integrator::Stepper;
use scbf_core::operators::{convective_b, forchheimer_c};
use scbf_core::{NoiseModel, PhysicsParams, SolverConfig};

fn convective(c: &mut Criterion) {
    let mut g = c.benchmark_group("convective_b");
    for (dim, n) in [(2, 32), (2, 64), (3, 16)] {
        let u = bench_field(dim, n, 1);
        g.bench_with_input(BenchmarkId::from_parameter(format!("{dim}d-{n}")), &u, |b, u| {
            b.iter(|| convective_b(black_box(u)))
        });
    }
    g.finish();
}

fn forchheimer(c: &mut Criterion) {
    let mut g = c.benchmark_group("forchheimer_c");
    let u = bench_field(2, 32, 2);
    for r in [3.0, 5.0, 9.0] {
        g.bench_with_input(BenchmarkId::from_parameter(r), &r, |b, &r| b.iter(|| forchheimer_c(black_box(&u), r)));
    }
    g.finish();
}

fn stepping(c: &mut Criterion) {
    let u = bench_field(2, 32, 3);
    let params = PhysicsParams::new(1.0, 1.0, 5.0).unwrap();
    let model = NoiseModel::additive(u.space(), 0.1).unwrap();
    let config = SolverConfig::new(1e-3, 1.0);
    let stepper = Stepper::new(u.space(), &params, &model, &config).unwrap();
    let mut stream = config.stream(7, 0);
    c.bench_function("exponential_em_step_2d_32", |b| {
        b.iter(|| stepper.step(black_box(&u), 0.0, &mut stream).unwrap())
    });
}

criterion_group!(benches, convective, forchheimer, stepping);
criterion_main!(benches);
