use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use magnonlab::{fit_curve, interpolate_poly, FitModel, FitOptions};

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

/// Deterministic pseudo-noise so the benchmark input is fixed.
fn jitter(k: usize) -> f64 {
    ((k as f64 * 12.9898).sin() * 43758.5453).fract() - 0.5
}

fn fits(c: &mut Criterion) {
    let x = linspace(0.0, 6.0, 81);
    let cases = [
        ("gaussian", FitModel::Gaussian { baseline: true }, vec![1.0, 3.0, 0.5, 0.1]),
        ("lorentzian", FitModel::Lorentzian { baseline: true }, vec![0.8, 2.5, 0.9, 0.2]),
        ("exponential", FitModel::ExponentialDecay { offset: true }, vec![1.0, 1.5, 0.05]),
        ("sinusoid", FitModel::Sinusoid, vec![0.4, 5.0, 0.7, 0.5]),
    ];
    let mut g = c.benchmark_group("fit_curve");
    for (name, model, truth) in cases {
        let y: Vec<f64> = x.iter().enumerate().map(|(k, &xi)| model.eval(&truth, xi) + 0.02 * jitter(k)).collect();
        let opts = FitOptions::weighted(vec![0.02; x.len()]);
        g.bench_function(name, |b| b.iter(|| fit_curve(model.clone(), black_box(&x), black_box(&y), &opts).unwrap()));
    }
    g.finish();
}

fn polynomial(c: &mut Criterion) {
    let x = linspace(0.0, 2000.0, 11);
    let y: Vec<f64> = x.iter().map(|v| 2e6 + 1.5e3 * v + 0.2 * v * v).collect();
    c.bench_function("interpolate_poly_order2", |b| b.iter(|| interpolate_poly(black_box(&x), black_box(&y), 2).unwrap()));
}

criterion_group!(benches, fits, polynomial);
criterion_main!(benches);
