use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use optomech_core::switching::{hysteresis_sweep, switch_metrics, MeasurePolicy, Ramp};
use optomech_core::{DriveConfig, SystemParams};

fn dynamics(c: &mut Criterion) {
    let mut g = c.benchmark_group("dynamics");
    g.sample_size(10);
    let strong = SystemParams::switching_strong_hopping();
    let drive = DriveConfig { eta0: 0.001, p_amp: 0.5, omega_mod: 1.0 };
    let policy = MeasurePolicy::default();
    g.bench_function("switch_metrics_60_periods", |b| {
        b.iter(|| switch_metrics(black_box(&strong), black_box(&drive), &policy))
    });
    let p = SystemParams::bistable_reference();
    let ramp = Ramp { input_min: 0.01, input_max: 1.0, rate: 1e-3, points: 2000 };
    g.bench_function("hysteresis_loop", |b| {
        b.iter(|| hysteresis_sweep(black_box(&p), black_box(&ramp), 0.1, 1e-8))
    });
    g.finish();
}

criterion_group!(benches, dynamics);
criterion_main!(benches);
