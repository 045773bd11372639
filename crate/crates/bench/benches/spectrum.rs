use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qst_core::{diagonalize_medium, operator_fidelity, solve_wavevectors, ChainSpec, ProtocolSpec};

fn medium(c: &mut Criterion) {
    let mut group = c.benchmark_group("medium");
    for n in [39, 79, 159] {
        let chain = ChainSpec::new(n, 1.0).unwrap();
        group.bench_with_input(BenchmarkId::new("dense", n), &chain, |b, chain| {
            b.iter(|| diagonalize_medium(black_box(chain)))
        });
        group.bench_with_input(BenchmarkId::new("wavevectors", n), &chain, |b, chain| {
            b.iter(|| solve_wavevectors(black_box(chain)).unwrap())
        });
    }
    group.finish();
}

fn midpoint(c: &mut Criterion) {
    let chain = ChainSpec::new(39, 1.0).unwrap();
    let spec = ProtocolSpec::from_distance(chain, 13, 0.1, 600.0).unwrap();
    c.bench_function("operator_fidelity/d13", |b| {
        b.iter(|| operator_fidelity(black_box(&spec)).unwrap())
    });
}

criterion_group!(benches, medium, midpoint);
criterion_main!(benches);
