use consensus_hmd::fusion::{hmd_fuse, optimize_weights, weight_cost, CostEvaluator, FusionMethod, OptimizerOptions};
use consensus_hmd::WeightVector;
use consensus_hmd_bench::track_densities;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn fuse(c: &mut Criterion) {
    let mut g = c.benchmark_group("hmd_fuse");
    for (n, dim) in [(2, 4), (4, 4), (4, 5)] {
        let ds = track_densities(n, dim);
        let w = WeightVector::uniform(n);
        g.bench_with_input(BenchmarkId::from_parameter(format!("n{n}_d{dim}")), &ds, |b, ds| {
            b.iter(|| hmd_fuse(black_box(ds), &w).unwrap())
        });
    }
    g.finish();
}

fn cost(c: &mut Criterion) {
    let ds = track_densities(4, 5);
    let w = WeightVector::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
    let eval = CostEvaluator::new(&ds).unwrap();
    c.bench_function("weight_cost_direct", |b| {
        b.iter(|| weight_cost(black_box(&w), &ds, FusionMethod::Hmd).unwrap())
    });
    c.bench_function("weight_cost_cached", |b| {
        b.iter(|| eval.cost(FusionMethod::Hmd, black_box(w.as_slice()), true).unwrap())
    });
}

fn optimize(c: &mut Criterion) {
    let mut g = c.benchmark_group("optimize_weights");
    g.sample_size(20);
    for n in [3, 4] {
        let ds = track_densities(n, 5);
        g.bench_with_input(BenchmarkId::from_parameter(n), &ds, |b, ds| {
            b.iter(|| optimize_weights(black_box(ds), FusionMethod::Hmd, &OptimizerOptions::default()).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, fuse, cost, optimize);
criterion_main!(benches);
