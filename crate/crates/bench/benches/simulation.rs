use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;

use homodyne_core::hg_modes::{decompose_analytic, hg_amplitudes};
use homodyne_core::quadrature::GaussHermite;
use homodyne_core::validation::golden_trace_config;
use homodyne_core::{
    decompose, homodyne_expectation, simulate_homodyne_trace, split_detector_expectation, Acquisition, Basis,
    SampledProfile,
};

const WAIST: f64 = 106e-6;
const WAVELENGTH: f64 = 1.064e-6;

fn displaced(d: f64) -> impl Fn(f64) -> Complex64 {
    let basis = Basis::new(WAIST, WAVELENGTH, 1).unwrap();
    move |x| Complex64::new(homodyne_core::hg_amplitude(0, x - d, &basis).unwrap(), 0.0)
}

fn modes(c: &mut Criterion) {
    let mut g = c.benchmark_group("modes");
    g.bench_function("gauss_hermite_128", |b| b.iter(|| GaussHermite::new(black_box(128))));
    g.bench_function("hg_amplitudes_order_32", |b| b.iter(|| hg_amplitudes(32, black_box(3e-5), WAIST)));

    let basis = Basis::new(WAIST, WAVELENGTH, 8).unwrap();
    let profile = SampledProfile::from_fn(basis.default_grid(), displaced(0.2 * WAIST)).unwrap();
    g.bench_function("decompose_sampled_4097", |b| b.iter(|| decompose(black_box(&profile), &basis).unwrap()));
    g.bench_function("decompose_analytic", |b| {
        b.iter(|| decompose_analytic(displaced(black_box(0.2 * WAIST)), &basis).unwrap())
    });
    g.finish();
}

fn detection(c: &mut Criterion) {
    let cfg = golden_trace_config();
    let mut g = c.benchmark_group("detection");
    g.bench_function("homodyne_expectation", |b| b.iter(|| homodyne_expectation(black_box(&cfg.state), &cfg.lo)));
    g.bench_function("split_detector_expectation", |b| b.iter(|| split_detector_expectation(black_box(&cfg.state))));
    g.finish();
}

fn traces(c: &mut Criterion) {
    let mut g = c.benchmark_group("trace");
    g.sample_size(20);
    for intervals in [1usize, 100] {
        let mut cfg = golden_trace_config().with_intervals_per_point(intervals);
        cfg.n_samples = 2001;
        cfg.acquisition = Acquisition::Scan;
        g.bench_with_input(BenchmarkId::new("scan_2001", intervals), &cfg, |b, cfg| {
            b.iter(|| simulate_homodyne_trace(cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, modes, detection, traces);
criterion_main!(benches);
