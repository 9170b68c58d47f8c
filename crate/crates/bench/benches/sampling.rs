use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use tuplewise::chain::{cftp_state, level_key, scan_patterns};
use tuplewise::{build, sample_path, Key};
use tuplewise_bench::{bench_config, WINDOW_SIZES};

fn hierarchy_build(c: &mut Criterion) {
    let cfg = bench_config();
    let mut group = c.benchmark_group("hierarchy_build");
    for len in WINDOW_SIZES {
        group.throughput(Throughput::Elements(len as u64));
        group.bench_with_input(BenchmarkId::from_parameter(len), &len, |b, &len| {
            b.iter(|| build(black_box((0, len - 1)), &cfg).unwrap())
        });
    }
    group.finish();
}

fn path_sampling(c: &mut Criterion) {
    let cfg = bench_config();
    let mut group = c.benchmark_group("sample_path");
    for len in WINDOW_SIZES {
        group.throughput(Throughput::Elements(len as u64));
        group.bench_with_input(BenchmarkId::from_parameter(len), &len, |b, &len| {
            b.iter(|| sample_path(black_box((0, len - 1)), &cfg).unwrap())
        });
    }
    group.finish();
}

fn coupling(c: &mut Criterion) {
    let key = level_key(Key::from_seed(bench_config().seed), 1);
    let mut target = 0i64;
    c.bench_function("cftp_state", |b| {
        b.iter(|| {
            target += 1;
            cftp_state(key, black_box(target), 1 << 24).unwrap()
        })
    });
}

fn pattern_scan(c: &mut Criterion) {
    let key = level_key(Key::from_seed(bench_config().seed), 1);
    let count = 1_000_000u64;
    let mut group = c.benchmark_group("scan_patterns");
    group.throughput(Throughput::Elements(count));
    group.bench_function("1e6", |b| b.iter(|| scan_patterns(key, black_box(0), count)));
    group.finish();
}

criterion_group!(benches, hierarchy_build, path_sampling, coupling, pattern_scan);
criterion_main!(benches);
