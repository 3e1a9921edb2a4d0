use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use semf1_bench::{random_batch, random_points, random_set, rng};
use semf1_core::baselines::{extended_hungarian, hungarian_score, MeanKind};
use semf1_core::continuous::{best_match_continuous_with, DistanceSpec, NeighborSearch};
use semf1_core::similarity::ring_similarity;
use semf1_core::study::{enumerate_cells, run_cell, StudyConfig, StudyKind};
use semf1_core::{best_match, evaluate};

fn bench_evaluate(c: &mut Criterion) {
    let mut group = c.benchmark_group("evaluate");
    for &(n, examples) in &[(24, 1000), (100, 1000), (100, 10_000)] {
        let s = ring_similarity(n).unwrap();
        let batch = random_batch(n, examples, 6, 1);
        group.bench_with_input(BenchmarkId::new(format!("L{n}"), examples), &batch, |b, batch| {
            b.iter(|| evaluate(black_box(batch), &s).unwrap())
        });
    }
    group.finish();
}

fn bench_best_match(c: &mut Criterion) {
    let mut group = c.benchmark_group("best_match");
    let s = ring_similarity(200).unwrap();
    let mut r = rng(2);
    for len in [4, 16, 64] {
        let a = random_set(&mut r, 200, len);
        let t = random_set(&mut r, 200, len);
        group.bench_with_input(BenchmarkId::from_parameter(len), &len, |b, _| {
            b.iter(|| best_match(black_box(&a), black_box(&t), &s).unwrap())
        });
    }
    group.finish();
}

fn bench_hungarian(c: &mut Criterion) {
    let mut group = c.benchmark_group("hungarian");
    let s = ring_similarity(96).unwrap();
    let mut r = rng(3);
    for len in [4, 17, 40] {
        let p = random_set(&mut r, 96, len);
        let t = random_set(&mut r, 96, len / 2 + 1);
        group.bench_with_input(BenchmarkId::new("score", len), &len, |b, _| {
            b.iter(|| hungarian_score(black_box(&p), black_box(&t), &s))
        });
        group.bench_with_input(BenchmarkId::new("extended", len), &len, |b, _| {
            b.iter(|| extended_hungarian(black_box(&p), black_box(&t), &s, MeanKind::Arithmetic))
        });
    }
    group.finish();
}

fn bench_neighbors(c: &mut Criterion) {
    let mut group = c.benchmark_group("continuous_nearest");
    let dist = DistanceSpec::euclidean(1.0).unwrap();
    for &(points, dim) in &[(64, 3), (1024, 3), (1024, 6), (1024, 8), (1024, 12)] {
        let a = random_points(points, dim, 4);
        let t = random_points(points, dim, 5);
        for (name, search) in [("brute", NeighborSearch::BruteForce), ("kdtree", NeighborSearch::KdTree)] {
            group.bench_with_input(BenchmarkId::new(name, format!("{points}x{dim}")), &search, |b, &search| {
                b.iter(|| best_match_continuous_with(black_box(&a), black_box(&t), &dist, search).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_study_cell(c: &mut Criterion) {
    let mut group = c.benchmark_group("study_cell");
    group.sample_size(10);
    for kind in [StudyKind::A, StudyKind::C, StudyKind::D] {
        let config = StudyConfig::default_for(kind);
        let cells = enumerate_cells(&config);
        let cell = cells.last().unwrap().clone();
        group.bench_function(kind.name(), |b| b.iter(|| run_cell(&config, black_box(&cell), false).unwrap()));
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_evaluate,
    bench_best_match,
    bench_hungarian,
    bench_neighbors,
    bench_study_cell
);
criterion_main!(benches);
