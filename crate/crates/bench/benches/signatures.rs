use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hoqc_bench::qubit_comb;
use hoqc_core::combs::{verify_interleaving_intersection, verify_tombstone, DEFAULT_SIZE_LIMIT};
use hoqc_core::signature_of;
use std::hint::black_box;

fn comb_signatures(c: &mut Criterion) {
    let mut group = c.benchmark_group("comb_signature");
    for n in [2, 4, 6] {
        let expr = qubit_comb(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &expr, |b, e| {
            b.iter(|| signature_of(black_box(e)).unwrap())
        });
    }
    group.finish();
}

fn theorems(c: &mut Criterion) {
    c.bench_function("interleaving_3_3", |b| {
        b.iter(|| verify_interleaving_intersection(black_box(3), 3, DEFAULT_SIZE_LIMIT).unwrap())
    });
    c.bench_function("tombstone_3_3", |b| {
        b.iter(|| verify_tombstone(black_box(3), 3, DEFAULT_SIZE_LIMIT).unwrap())
    });
}

criterion_group!(benches, comb_signatures, theorems);
criterion_main!(benches);
