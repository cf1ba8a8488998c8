use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use lppl_bench::bubble;
use lppl_core::calibration::solve_linear_params;
use lppl_core::scan::window_seed;
use lppl_core::{fit_window, gen_shrinking_windows, scan, FitConfig, NonlinearParams, ScanConfig, SearchBounds, WindowSpec};

fn slaving(c: &mut Criterion) {
    let series = bubble(400, 1);
    let window = WindowSpec::new(0, 399);
    let nl = NonlinearParams {
        m: 0.5,
        omega: 8.0,
        phi: 1.0,
        tc: 430.0,
    };
    c.bench_function("solve_linear_params/400", |b| {
        b.iter(|| solve_linear_params(black_box(&series), &window, black_box(&nl)).unwrap())
    });
}

fn single_window(c: &mut Criterion) {
    let series = bubble(400, 2);
    let window = WindowSpec::new(0, 399);
    let mut cfg = FitConfig::default();
    cfg.taboo.seed = window_seed(2, &window);
    let mut group = c.benchmark_group("fit_window");
    group.sample_size(10);
    group.bench_function("400 days, defaults", |b| {
        b.iter(|| fit_window(black_box(&series), &window, &SearchBounds::default(), &cfg).unwrap())
    });
    group.finish();
}

fn window_scan(c: &mut Criterion) {
    let series = bubble(400, 3);
    let windows = gen_shrinking_windows(0, 323, 399, 17);
    let cfg = ScanConfig {
        seed: 3,
        ..ScanConfig::default()
    };
    let mut group = c.benchmark_group("scan");
    group.sample_size(10);
    group.bench_function("20 shrinking windows", |b| b.iter(|| scan(black_box(&series), &windows, &cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, slaving, single_window, window_scan);
criterion_main!(benches);
