use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use gaplap_core::encoder::{self, Dims, EncoderParams};
use gaplap_core::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn params() -> EncoderParams {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    EncoderParams::init(2000, 20, Dims::default(), false, &mut rng)
}

fn ids(len: usize) -> (Vec<u32>, Vec<u32>) {
    let words = (0..len as u32).map(|t| t * 7 % 2000).collect();
    let tags = (0..len as u32).map(|t| t % 20).collect();
    (words, tags)
}

fn bench_forward(c: &mut Criterion) {
    let params = params();
    let mut group = c.benchmark_group("encode_and_score");
    for len in [10usize, 20, 40] {
        let (words, tags) = ids(len);
        group.bench_with_input(BenchmarkId::from_parameter(len), &len, |b, _| {
            b.iter(|| {
                let encoded = encoder::encode(black_box(&words), &tags, &params).unwrap();
                black_box(encoder::score_arcs(&encoded, &params))
            })
        });
    }
    group.finish();
}

fn bench_backward(c: &mut Criterion) {
    let params = params();
    let mut group = c.benchmark_group("score_backward");
    for len in [10usize, 20, 40] {
        let (words, tags) = ids(len);
        let encoded = encoder::encode(&words, &tags, &params).unwrap();
        let (scores, cache) = encoder::score_arcs(&encoded, &params);
        let d_scores = Mat::filled(scores.rows(), scores.cols(), 0.01);
        group.bench_with_input(BenchmarkId::from_parameter(len), &len, |b, _| {
            b.iter(|| {
                let mut grads = params.zeros_like();
                encoder::backward(black_box(&d_scores), &encoded, &cache, &params, &mut grads);
                black_box(grads)
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_forward, bench_backward);
criterion_main!(benches);
