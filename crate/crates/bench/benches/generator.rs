use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ptfprg_core::generator::SampleScratch;
use ptfprg_core::harness::oracle::convolution_expectation;
use ptfprg_core::harness::sampler::master_seed;
use ptfprg_core::nisan::NisanParams;
use ptfprg_core::quadratic::eigendecompose;
use ptfprg_core::rng::CounterRng;
use ptfprg_core::{ApproxGaussianSpec, GeneratorConfig, Quadratic};

fn generator(c: &mut Criterion) {
    let mut group = c.benchmark_group("generator");
    for n in [4usize, 16, 64] {
        let cfg = GeneratorConfig::desk(n).unwrap();
        let mut seed = vec![0u8; cfg.seed_bytes()];
        master_seed(1, 0, &mut seed);
        let mut scratch = SampleScratch::default();
        let mut out = vec![0.0; n];
        group.bench_with_input(BenchmarkId::new("desk_sample", n), &n, |b, _| {
            b.iter(|| cfg.sample_into(black_box(&seed), &mut scratch, &mut out).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("one_family", n), &n, |b, _| {
            b.iter(|| cfg.family(black_box(&seed), 0).unwrap())
        });
    }
    group.finish();
}

fn building_blocks(c: &mut Criterion) {
    let mut rng = CounterRng::new(7);
    let params = NisanParams::random(64, 10, &mut rng).unwrap();
    let mut blocks = Vec::new();
    c.bench_function("nisan_expand_m64_k10", |b| b.iter(|| params.expand_into(black_box(&mut blocks))));

    let spec = ApproxGaussianSpec::new(2f64.powi(-20)).unwrap();
    let mut j = 0u64;
    c.bench_function("approx_gaussian_sample", |b| {
        b.iter(|| {
            j = j.wrapping_add(0x9E37_79B9) % spec.resolution;
            spec.sample(black_box(j), black_box(spec.resolution - 1 - j)).unwrap()
        })
    });

    let q = Quadratic::random(16, &mut CounterRng::new(3));
    c.bench_function("eigendecompose_n16", |b| b.iter(|| eigendecompose(black_box(&q)).unwrap()));

    let q = Quadratic::random(8, &mut CounterRng::new(4));
    let mut group = c.benchmark_group("oracle");
    group.sample_size(10);
    group.bench_function("convolution_n8_2^18", |b| {
        b.iter(|| convolution_expectation(black_box(&q), 1 << 18).unwrap())
    });
    group.finish();
}

criterion_group!(benches, generator, building_blocks);
criterion_main!(benches);
