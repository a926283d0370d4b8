use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use gaplap_bench::scores_for_len;
use gaplap_core::chart;

fn bench_inside_outside_marginals(c: &mut Criterion) {
    let mut group = c.benchmark_group("inside_outside_marginals");
    for len in [10usize, 20, 40, 80] {
        let scores = scores_for_len(len);
        group.bench_with_input(BenchmarkId::from_parameter(len), &scores, |b, s| {
            b.iter(|| {
                let inside = chart::inside(black_box(s)).unwrap();
                let beta = chart::outside(s, &inside);
                black_box(chart::arc_marginals(&inside, &beta))
            })
        });
    }
    group.finish();
}

fn bench_decode(c: &mut Criterion) {
    let mut group = c.benchmark_group("eisner_decode");
    for len in [10usize, 20, 40, 80] {
        let scores = scores_for_len(len);
        group.bench_with_input(BenchmarkId::from_parameter(len), &scores, |b, s| {
            b.iter(|| black_box(chart::eisner_decode(black_box(s)).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_inside_outside_marginals, bench_decode);
criterion_main!(benches);
