use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use magnonlab::engine::fastest_rate;
use magnonlab::protocol::{run_decay_phase_sense, LabConfig};
use magnonlab::system::{parametric_interaction, qubit_magnon_space, MAGNON, QUBIT};
use magnonlab::{build_mode_operators, evolve_lindblad, CollapseTerm, DensityMatrix, EvolveOptions, Hamiltonian, SystemParams};

/// Damped qubit-magnon beamsplitter over one swap period.
fn beamsplitter(c: &mut Criterion) {
    let mut g = c.benchmark_group("lindblad_beamsplitter");
    for levels in [3, 4, 6] {
        let space = qubit_magnon_space(levels).unwrap();
        let omega = 2.0e6;
        let h = Hamiltonian::from(parametric_interaction(omega, 0.0, &space).unwrap());
        let (q, nq) = build_mode_operators(&space, QUBIT).unwrap();
        let (m, nm) = build_mode_operators(&space, MAGNON).unwrap();
        let col = [CollapseTerm::new(m, 3.0e7).unwrap(), CollapseTerm::new(q, 3.6e5).unwrap()];
        let rho = DensityMatrix::basis(space.clone(), &[1, 0]).unwrap();
        let t = std::f64::consts::PI / omega;
        let dt = 0.05 / fastest_rate(&h, &col, 0.0, t);
        let opts = EvolveOptions::new(0.0, t, dt).record_at(vec![t]).observe(vec![nq, nm]);
        g.bench_with_input(BenchmarkId::from_parameter(levels), &levels, |b, _| {
            b.iter(|| evolve_lindblad(black_box(&rho), &h, &col, &opts).unwrap())
        });
    }
    g.finish();
}

/// A small decay-phase sweep including shot sampling.
fn decay_phase_sweep(c: &mut Criterion) {
    let params = SystemParams::reference();
    let lab = LabConfig { shots: 200, ..LabConfig::default() };
    let times: Vec<f64> = (0..8).map(|k| k as f64 * 20e-9).collect();
    let phases: Vec<f64> = (0..8).map(|k| k as f64 * std::f64::consts::FRAC_PI_4).collect();
    c.bench_function("decay_phase_sweep_8x8", |b| {
        b.iter(|| run_decay_phase_sense(&params, black_box(650.0), &times, &phases, &lab).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = beamsplitter, decay_phase_sweep
}
criterion_main!(benches);
