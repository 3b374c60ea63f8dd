use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use optomech_bench::spectrum_fixture;
use optomech_core::closed_form::spectrum_closed_form;
use optomech_core::spectrum::{default_omega_grid, spectrum_matrix};
use optomech_core::{NoiseModel, ThermalFactor};

fn spectrum(c: &mut Criterion) {
    let (p, s) = spectrum_fixture(1.0);
    let noise = NoiseModel::from_params(&p);
    let grid = default_omega_grid();
    c.bench_function("spectrum_matrix_2000", |b| {
        b.iter(|| spectrum_matrix(black_box(&p), &s, &noise, black_box(&grid)))
    });
    c.bench_function("spectrum_closed_form_2000", |b| {
        b.iter(|| spectrum_closed_form(black_box(&p), &s, &noise, black_box(&grid), ThermalFactor::SymmetrizedBrownian))
    });
}

criterion_group!(benches, spectrum);
criterion_main!(benches);
