//! Outer-iteration and full-solve throughput.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use ipmqp_core::generator::{generate, GenSpec};
use ipmqp_core::ipm::{longstep_iteration, run, shortstep_iteration, SolverConfig, StepMode};

fn bench_single_iteration(c: &mut Criterion) {
    let mut group = c.benchmark_group("outer_iteration");
    group.sample_size(30);
    for &n in &[16usize, 64] {
        let spec = GenSpec { n, m: n / 2, density: 1.0, q_rank: n / 4, mu0: 1.0, seed: 4 };
        let (problem, start) = generate(&spec).unwrap();
        let short = SolverConfig::short_step();
        group.bench_with_input(BenchmarkId::new("short_audited", n), &n, |b, _| {
            b.iter(|| black_box(shortstep_iteration(&problem, &start, &short, 0).unwrap()));
        });
        let mut long = SolverConfig::long_step();
        long.step_mode = StepMode::Practical;
        group.bench_with_input(BenchmarkId::new("long_practical", n), &n, |b, _| {
            b.iter(|| black_box(longstep_iteration(&problem, &start, &long, 0).unwrap()));
        });
    }
    group.finish();
}

fn bench_full_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("full_solve");
    group.sample_size(10);
    let spec = GenSpec { n: 16, m: 8, density: 1.0, q_rank: 4, mu0: 1.0, seed: 5 };
    let (problem, start) = generate(&spec).unwrap();
    let mut cfg = SolverConfig::short_step();
    cfg.epsilon = 1e-3;
    group.bench_function("short_n16_eps1e-3", |b| {
        b.iter(|| black_box(run(&problem, &start, &cfg).unwrap()));
    });
    group.bench_function("generate_n64", |b| {
        let spec = GenSpec { n: 64, m: 32, density: 1.0, q_rank: 8, mu0: 1.0, seed: 6 };
        b.iter(|| black_box(generate(&spec).unwrap()));
    });
    group.finish();
}

criterion_group!(benches, bench_single_iteration, bench_full_solve);
criterion_main!(benches);
