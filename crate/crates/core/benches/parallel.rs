//! Single-threaded pool versus the default rayon pool on the hot paths.
//!
//! Build with `--no-default-features` to time the purely sequential code.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use imprint_core::generate::{kmeans, KMeansParams};
use imprint_core::par::with_workers;
use imprint_core::runner::{NamedConfig, TaskSpec};
use imprint_core::{
    compute_nc1, generate_synthetic_split, imprint, run_grid, GenStrategy, GridSpec, ImprintConfig, SyntheticTaskSpec,
};

fn spec(seed: u64) -> SyntheticTaskSpec {
    SyntheticTaskSpec {
        class_count: 20,
        modes_per_class: 4,
        samples_per_mode: 25,
        dim: 64,
        mode_separation: 1.5,
        within_mode_std: 0.4,
        seed,
    }
}

/// (label, worker count); 0 means the default global pool.
const POOLS: [(&str, usize); 2] = [("one-thread", 1), ("default-pool", 0)];

fn bench_imprint(c: &mut Criterion) {
    let (train, test) = generate_synthetic_split(&spec(0), 10).unwrap();
    let config = ImprintConfig {
        gen: GenStrategy::KMeans(10),
        ..ImprintConfig::default()
    };
    let head = imprint(&train, &config).unwrap();
    let class0 = train.class_rows(0);

    let mut group = c.benchmark_group("imprint");
    group.sample_size(10);
    for (label, workers) in POOLS {
        group.bench_function(BenchmarkId::new("k-means-10", label), |b| {
            b.iter(|| with_workers(workers, || imprint(black_box(&train), &config).unwrap()))
        });
        group.bench_function(BenchmarkId::new("kmeans-restarts", label), |b| {
            b.iter(|| {
                with_workers(workers, || {
                    kmeans(black_box(class0.view()), KMeansParams::new(10, 1)).unwrap()
                })
            })
        });
        group.bench_function(BenchmarkId::new("predict-all", label), |b| {
            b.iter(|| with_workers(workers, || head.predict_all(black_box(&test)).unwrap()))
        });
        group.bench_function(BenchmarkId::new("nc1", label), |b| {
            b.iter(|| with_workers(workers, || compute_nc1(black_box(&train), true).unwrap()))
        });
    }
    group.finish();
}

fn bench_grid(c: &mut Criterion) {
    let grid = GridSpec {
        configs: [GenStrategy::Mean, GenStrategy::KMeans(3), GenStrategy::KFps(3)]
            .into_iter()
            .map(|gen| {
                NamedConfig::new(
                    gen.to_string(),
                    ImprintConfig {
                        gen,
                        ..ImprintConfig::default()
                    },
                )
            })
            .collect(),
        tasks: (0..4)
            .map(|t| {
                let mut s = spec(t);
                s.class_count = 8;
                s.dim = 32;
                TaskSpec::synthetic(format!("t{t}"), s, 5)
            })
            .collect(),
        seeds: vec![0, 1, 2],
        few_shot: Vec::new(),
    };
    let mut group = c.benchmark_group("grid");
    group.sample_size(10);
    for (label, workers) in POOLS {
        group.bench_function(BenchmarkId::new("3x4x3", label), |b| {
            b.iter(|| run_grid(black_box(&grid), workers).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_imprint, bench_grid);
criterion_main!(benches);
