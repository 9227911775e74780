//! Sequential against data-parallel evaluation of the two batch workloads: the X₀(N) level
//! sweep and the Green-identity self-test. Without the `parallel` feature both arms run
//! sequentially, which makes the fallback's overhead visible.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use arakelov_core::catalog::{x0n_report, x0n_sweep};
use arakelov_core::green::selftest;
use arakelov_core::Execution;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("x0n_sweep");
    group.sample_size(10);
    for max_n in [100u64, 200] {
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, max_n), &max_n, |b, &n| {
                b.iter(|| x0n_sweep(black_box(n), exec).unwrap())
            });
        }
    }
    group.finish();
}

fn single_report(c: &mut Criterion) {
    let mut group = c.benchmark_group("x0n_report");
    for n in [35u64, 385] {
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, &n| {
                b.iter(|| x0n_report(black_box(n), exec).unwrap())
            });
        }
    }
    group.finish();
}

fn green(c: &mut Criterion) {
    let mut group = c.benchmark_group("green_selftest");
    group.sample_size(10);
    for n in [6usize, 12] {
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, &n| {
                b.iter(|| selftest(black_box(n), 7, 50, exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, sweep, single_report, green);
criterion_main!(benches);
