use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use slb_bench::network;
use slb_core::spectral::{laplacian, spectral_summary, symmetric_eigen, EIGEN_TOL};
use slb_core::Family;
use std::hint::black_box;

fn eigen(c: &mut Criterion) {
    let mut group = c.benchmark_group("symmetric_eigen");
    group.sample_size(20);
    for n in [16, 64, 128] {
        let (g, _) = network(Family::Cycle { n });
        let l = laplacian(&g);
        group.bench_with_input(BenchmarkId::from_parameter(n), &l, |b, m| {
            b.iter(|| symmetric_eigen(black_box(m), EIGEN_TOL).unwrap())
        });
    }
    group.finish();
}

fn summary(c: &mut Criterion) {
    let (g, sp) = network(Family::Hypercube { dim: 6 });
    c.bench_function("spectral_summary/Q6", |b| {
        b.iter(|| spectral_summary(black_box(&g), black_box(&sp), EIGEN_TOL).unwrap())
    });
}

criterion_group!(benches, eigen, summary);
criterion_main!(benches);
