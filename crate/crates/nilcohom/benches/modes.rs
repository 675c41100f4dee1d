//! Parallel vs sequential throughput on the data-parallel inner loops:
//! the seeded identity suite and the per-bidegree cohomology table.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nilcohom::identities::run_identity_suite;
use nilcohom::model::catalog;
use nilcohom::par::ExecMode;
use std::hint::black_box;

fn bench_identity_suite(c: &mut Criterion) {
    let model = catalog("iwasawa3").unwrap();
    let mut group = c.benchmark_group("identity-suite");
    for mode in [ExecMode::Sequential, ExecMode::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(mode.name()), &mode, |b, &mode| {
            b.iter(|| black_box(run_identity_suite(&model, 0, 64, mode)));
        });
    }
    group.finish();
}

fn bench_cohomology(c: &mut Criterion) {
    let model = catalog("iwasawa3").unwrap();
    let mut group = c.benchmark_group("cohomology-table");
    group.bench_function("iwasawa3", |b| {
        b.iter(|| black_box(nilcohom::hodge::cohomology(&model)));
    });
    group.finish();
}

fn bench_scan(c: &mut Criterion) {
    let model = catalog("iwasawa3").unwrap();
    let family = nilcohom::deform::kuranishi_series(&model, 3).unwrap();
    let points = nilcohom::deform::sample_points(family.m, 4, 0);
    let mut group = c.benchmark_group("hodge-scan");
    group.sample_size(10);
    group.bench_function("iwasawa3-4pts", |b| {
        b.iter(|| {
            black_box(
                nilcohom::deform::invariance_scan(
                    &model,
                    &family,
                    &points,
                    &[nilcohom::deform::Theory::Dolbeault],
                )
                .unwrap(),
            )
        });
    });
    group.finish();
}

criterion_group!(benches, bench_identity_suite, bench_cohomology, bench_scan);
criterion_main!(benches);
