use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use senergy_bench::sample_trace;
use senergy_core::simulate::{random_graph, rng_from_seed};
use senergy_core::{certify_trace, interval_union, lb_trajectory, reduce_trace, simulate, Configuration, PolicyKind, SimConfig};

fn union(c: &mut Criterion) {
    let mut group = c.benchmark_group("interval_union");
    for n in [16, 64, 256] {
        let mut rng = rng_from_seed(n as u64);
        let g = random_graph(n, 4.0 / n as f64, None, &mut rng);
        let p: Vec<f64> = (0..n).map(|i| ((i * 7919) % n) as f64 / n as f64).collect();
        let x = Configuration::from_positions(&p).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| interval_union(black_box(&g), black_box(&x)))
        });
    }
    group.finish();
}

fn ledger(c: &mut Criterion) {
    let trace = sample_trace(8, 0.25, 200, 1);
    c.bench_function("reduce_trace n=8", |b| b.iter(|| reduce_trace(black_box(&trace)).unwrap()));
    c.bench_function("certify_trace n=8 s=0.5", |b| {
        b.iter(|| certify_trace(black_box(&trace), 0.5).unwrap())
    });
}

fn lower_bound(c: &mut Criterion) {
    let mut group = c.benchmark_group("lb_trajectory");
    for n in [2, 3, 4] {
        let rho = 0.2f64;
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| lb_trajectory(n, rho, rho.powi(2 * n as i32)).unwrap())
        });
    }
    group.finish();
}

fn simulation(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate");
    for policy in [PolicyKind::Midpoint, PolicyKind::UniformRandom, PolicyKind::RandomMatrix] {
        let mut cfg = SimConfig::new(8, 0.1, policy, 5);
        cfg.steps_cap = 1000;
        group.bench_function(format!("{policy:?}"), |b| b.iter(|| simulate(black_box(&cfg)).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, union, ledger, lower_bound, simulation);
criterion_main!(benches);
