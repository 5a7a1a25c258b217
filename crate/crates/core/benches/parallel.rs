use std::f64::consts::FRAC_PI_2;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dcg_core::benchmarking::{detuning_sweep, simulate_rb, GateImplementation, RbConfig, RbMode, SweepPath};
use dcg_core::gate::PulseGate;
use dcg_core::model::{mhz_to_rad_per_s, presets};
use dcg_core::parallel::Execution;
use dcg_core::waveforms::{gaussian_envelope, GRID_DT};

fn gate() -> PulseGate {
    PulseGate::new(gaussian_envelope(40e-9, 5e-9, GRID_DT, FRAC_PI_2).unwrap())
}

fn bench_rb(c: &mut Criterion) {
    let mut group = c.benchmark_group("interleaved_rb");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        let mut config = RbConfig::new(RbMode::Interleaved, presets::q0(), GateImplementation::Pulse(gate()), 1);
        config.execution = exec;
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &config, |b, cfg| {
            b.iter(|| black_box(simulate_rb(cfg).unwrap()))
        });
    }
    group.finish();
}

fn bench_sweep(c: &mut Criterion) {
    let g = gate();
    let q0 = presets::q0();
    let detunings: Vec<f64> = (-32..=32).map(|k| mhz_to_rad_per_s(k as f64 * 0.25)).collect();
    let mut group = c.benchmark_group("detuning_sweep");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_function(BenchmarkId::from_parameter(format!("{exec:?}")), |b| {
            b.iter(|| black_box(detuning_sweep(&g, &detunings, &q0, true, &SweepPath::Fast, exec).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_rb, bench_sweep);
criterion_main!(benches);
