// Copyright (c) 2026 The geospine Authors
// SPDX-License-Identifier: Apache-2.0

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use geospine::{osed_all, pareto_pass, stage_one, variance_diagonals, BudgetKind, OptConfig};
use geospine_bench::{
    synthetic_allocation, synthetic_oses, synthetic_spine, synthetic_workload, Shape,
};
use std::hint::black_box;

const SHAPES: [Shape; 3] = [
    Shape {
        counties: 4,
        tracts_per_county: 6,
        blocks_per_tract: 8,
    },
    Shape {
        counties: 8,
        tracts_per_county: 12,
        blocks_per_tract: 10,
    },
    Shape {
        counties: 16,
        tracts_per_county: 16,
        blocks_per_tract: 12,
    },
];

fn blocks(shape: Shape) -> usize {
    shape.counties * shape.tracts_per_county * shape.blocks_per_tract
}

fn bench_osed(c: &mut Criterion) {
    let mut group = c.benchmark_group("osed_all");
    for shape in SHAPES {
        let spine = synthetic_spine(shape);
        let oses = synthetic_oses(shape, 8, 13);
        group.bench_with_input(BenchmarkId::from_parameter(blocks(shape)), &(), |b, _| {
            b.iter(|| osed_all(black_box(&spine), black_box(&oses)).unwrap())
        });
    }
    group.finish();
}

fn bench_stage_one(c: &mut Criterion) {
    let mut group = c.benchmark_group("stage_one");
    group.sample_size(10);
    for shape in &SHAPES[..2] {
        let spine = synthetic_spine(*shape);
        let oses = synthetic_oses(*shape, 4, 13);
        let cfg = OptConfig::default();
        group.bench_with_input(BenchmarkId::from_parameter(blocks(*shape)), &(), |b, _| {
            b.iter(|| stage_one(black_box(&spine), black_box(&oses), &cfg).unwrap())
        });
    }
    group.finish();
}

fn bench_pareto_pass(c: &mut Criterion) {
    let mut group = c.benchmark_group("pareto_pass");
    for shape in SHAPES {
        let spine = synthetic_spine(shape);
        let alloc = synthetic_allocation(&spine, BudgetKind::Pure);
        group.bench_with_input(BenchmarkId::from_parameter(blocks(shape)), &(), |b, _| {
            b.iter(|| pareto_pass(black_box(&spine), black_box(&alloc), true))
        });
    }
    group.finish();
}

fn bench_variance(c: &mut Criterion) {
    let mut group = c.benchmark_group("variance_diagonals");
    group.sample_size(10);
    let workload = synthetic_workload();
    for shape in &SHAPES[..2] {
        let spine = synthetic_spine(*shape);
        let alloc = synthetic_allocation(&spine, BudgetKind::Zcdp);
        group.bench_with_input(BenchmarkId::from_parameter(blocks(*shape)), &(), |b, _| {
            b.iter(|| variance_diagonals(&spine, &alloc, &workload, &spine).unwrap())
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_osed,
    bench_stage_one,
    bench_pareto_pass,
    bench_variance
);
criterion_main!(benches);
