use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use vita_bench::{points, token_docs};
use vita_core::ops::lda::lda;
use vita_core::ops::pca::pca2;
use vita_core::ops::tfidf::tfidf;
use vita_core::ops::{LdaParams, TfidfParams};

fn bench_tfidf(c: &mut Criterion) {
    let mut group = c.benchmark_group("tfidf");
    for n in [100, 1000] {
        let docs = token_docs(n, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &docs, |b, d| {
            b.iter(|| tfidf(black_box(d), TfidfParams::default()).unwrap())
        });
    }
    group.finish();
}

fn bench_lda(c: &mut Criterion) {
    let mut group = c.benchmark_group("lda");
    group.sample_size(10);
    for n in [100, 500] {
        let docs = token_docs(n, 2);
        group.bench_with_input(BenchmarkId::from_parameter(n), &docs, |b, d| {
            b.iter(|| lda(black_box(d), &LdaParams::new(3, 7)).unwrap())
        });
    }
    group.finish();
}

fn bench_pca(c: &mut Criterion) {
    let mut group = c.benchmark_group("pca2");
    for (n, dim) in [(1000, 3), (1000, 24)] {
        let rows = points(n, dim, 3);
        group.bench_with_input(BenchmarkId::new(format!("{dim}d"), n), &rows, |b, r| b.iter(|| pca2(black_box(r)).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, bench_tfidf, bench_lda, bench_pca);
criterion_main!(benches);
