use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use perimean::diagnostics::{periodogram, variance_ratio_test, DEFAULT_HORIZONS};
use perimean::{fit, hp_filter, simulate_ensemble, FitConfig, FixtureSpec, SimulationConfig};
use perimean_bench::sample_period;

fn bench_hp_filter(c: &mut Criterion) {
    let series = sample_period(1);
    c.bench_function("hp_filter_1096", |b| {
        b.iter(|| hp_filter(black_box(series.values()), 40_000.0).unwrap())
    });
}

fn bench_fit(c: &mut Criterion) {
    let series = sample_period(2);
    let config = FitConfig::default();
    c.bench_function("fit_1096", |b| {
        b.iter(|| fit(black_box(&series), &config).unwrap())
    });
}

fn bench_diagnostics(c: &mut Criterion) {
    let series = sample_period(3);
    c.bench_function("periodogram_1096", |b| {
        b.iter(|| periodogram(black_box(&series)).unwrap())
    });
    c.bench_function("variance_ratio_1096", |b| {
        b.iter(|| variance_ratio_test(black_box(&series), &DEFAULT_HORIZONS).unwrap())
    });
}

fn bench_simulate(c: &mut Criterion) {
    let spec = FixtureSpec::three_year(0);
    let config = SimulationConfig::new(1000, 1095, 7.39, 7);
    let mut group = c.benchmark_group("simulate");
    group.sample_size(20);
    group.bench_function("ensemble_1000x1095", |b| {
        b.iter(|| simulate_ensemble(&spec.harmonics, &spec.params, black_box(&config)).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_hp_filter,
    bench_fit,
    bench_diagnostics,
    bench_simulate
);
criterion_main!(benches);
