use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hhash_core::{fit, generate_rotated_hypercube, normalize, random_stack, sign_binarize, SynthConfig, TrainConfig};

fn data(n_per_class: usize, k: usize) -> hhash_core::EmbeddingSet {
    generate_rotated_hypercube(&SynthConfig::new(n_per_class, 16, k, 0.1, 7)).unwrap().train
}

fn apply_rows(c: &mut Criterion) {
    let mut group = c.benchmark_group("apply_rows");
    for k in [16, 64] {
        let e = normalize(&data(256, k)).unwrap();
        let stack = random_stack(k, 1);
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, _| {
            b.iter(|| stack.apply_rows(black_box(e.data())).unwrap())
        });
    }
    group.finish();
}

fn binarize(c: &mut Criterion) {
    let mut group = c.benchmark_group("sign_binarize");
    for k in [16, 64] {
        let e = data(256, k);
        let stack = random_stack(k, 1);
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, _| {
            b.iter(|| sign_binarize(black_box(&e), Some(&stack)).unwrap())
        });
    }
    group.finish();
}

fn training_epoch(c: &mut Criterion) {
    let e = data(64, 64);
    let cfg = TrainConfig::default().with_epochs(1);
    c.bench_function("fit_one_epoch_1024x64", |b| b.iter(|| fit(black_box(&e), &cfg).unwrap()));
}

criterion_group!(benches, apply_rows, binarize, training_epoch);
criterion_main!(benches);
