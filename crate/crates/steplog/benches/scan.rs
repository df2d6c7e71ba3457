use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use steplog::problem::fixtures;
use steplog::profile::ProfilingConfig;
use steplog::solver::{run, Method, SolverConfig};
use steplog::tuner::{scan_parallel, scan_sequential, GridSpec, InitMode};

/// Sequential vs. data-parallel parameter scan on the degree-7 fixture.
///
/// Both paths must produce bit-identical matrices (covered by tests); the
/// bench quantifies what the rayon fan-out buys at a few grid sizes.
fn bench_scan(c: &mut Criterion) {
    let fixture = fixtures::grn7();
    let base = SolverConfig::new(Method::Sab3);
    let prof = ProfilingConfig::default();

    let mut group = c.benchmark_group("grid_scan");
    group.sample_size(10);
    for (n_alpha, n_beta, n_ens) in [(5usize, 5usize, 10usize), (9, 7, 10)] {
        let grid = GridSpec::new(
            -9.0,
            15.0,
            n_alpha,
            -6.0,
            12.0,
            n_beta,
            n_ens,
            42,
            InitMode::PerturbReference(1.0),
        )
        .expect("valid grid");
        let label = format!("{n_alpha}x{n_beta}x{n_ens}");
        group.bench_with_input(
            BenchmarkId::new("sequential", &label),
            &grid,
            |b, grid| {
                b.iter(|| scan_sequential(&fixture.problem, &base, black_box(grid), &prof))
            },
        );
        group.bench_with_input(BenchmarkId::new("parallel", &label), &grid, |b, grid| {
            b.iter(|| scan_parallel(&fixture.problem, &base, black_box(grid), &prof))
        });
    }
    group.finish();
}

/// Single-trajectory cost of each scheme from the default starts, as a
/// baseline for reading the scan numbers.
fn bench_methods(c: &mut Criterion) {
    let fixture = fixtures::hill6();
    let starts = fixture.default_starts.clone();

    let mut group = c.benchmark_group("single_run");
    for method in Method::ALL {
        let cfg = SolverConfig::new(method);
        group.bench_function(method.name(), |b| {
            b.iter(|| run(&fixture.problem, &cfg, black_box(&starts)))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_scan, bench_methods);
criterion_main!(benches);
