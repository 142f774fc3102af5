use criterion::{criterion_group, criterion_main, Criterion};
use rmsdyn_bench::{loaded_9bus, truncated};
use std::hint::black_box;

fn network_solve(c: &mut Criterion) {
    let (solver, sources, guess) = loaded_9bus();
    c.bench_function("network_solve_9bus", |b| {
        b.iter(|| {
            solver
                .solve(black_box(&sources), black_box(&guess))
                .unwrap()
        })
    });
}

fn rk4_step(c: &mut Criterion) {
    let spec = truncated("GFL13-synco-S24.75-H4", 1.0);
    c.bench_function("rk4_step_gfl13_synco", |b| {
        b.iter_batched(
            || rmsdyn_core::engine::Simulation::new(&spec).unwrap(),
            |mut s| s.step(1e-3).unwrap(),
            criterion::BatchSize::SmallInput,
        )
    });
}

fn short_runs(c: &mut Criterion) {
    let mut g = c.benchmark_group("run_1s");
    g.sample_size(10);
    for name in [
        "GFL13-noSynCo",
        "GFL13-genH2-dual-S24.75-S20.70-H6",
        "GF-synco3",
    ] {
        let spec = truncated(name, 1.0);
        g.bench_function(name, |b| {
            b.iter(|| rmsdyn_core::run(black_box(&spec)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, network_solve, rk4_step, short_runs);
criterion_main!(benches);
