use std::f64::consts::FRAC_PI_2;

use dcg_core::benchmarking::{
    detuning_sweep, simulate_rb, spectator_rb, GateImplementation, RbConfig, RbMode, SpectatorOptions, SweepPath,
};
use dcg_core::gate::PulseGate;
use dcg_core::model::{mhz_to_rad_per_s, presets, QubitModel};
use dcg_core::optimizer::{calibrate_gate, optimize_pulse, CalibrationOptions, OptimizeOptions};
use dcg_core::parallel::Execution;
use dcg_core::waveforms::{ansatz_envelope, gaussian_envelope, GRID_DT};

const T: f64 = 40e-9;

fn pulses() -> Vec<(&'static str, dcg_core::waveforms::Envelope)> {
    let opt = optimize_pulse(&OptimizeOptions::new(T, 2)).unwrap();
    vec![
        ("optimal", ansatz_envelope(&opt.params, GRID_DT).unwrap()),
        ("gaussian", gaussian_envelope(T, T / 8.0, GRID_DT, FRAC_PI_2).unwrap()),
    ]
}

/// On a two-level target the interleaved estimate and the channel infidelity measure
/// the same quantity, so they must agree within the fitted errors.
#[test]
fn fast_and_simulated_sweeps_agree_on_a_qubit() {
    let model = presets::q0().with_levels(2);
    let detunings: Vec<f64> = [-6.0, -3.0, -1.0, 0.0, 1.0, 3.0, 6.0].iter().map(|&m| mhz_to_rad_per_s(m)).collect();
    let slow = SweepPath::Simulated {
        lengths: dcg_core::benchmarking::default_lengths(),
        n_sequences: 40,
        seed: 3,
    };
    for (name, env) in pulses() {
        let gate = calibrate_gate(&env, &model, &CalibrationOptions::default()).unwrap().gate;
        let fast = detuning_sweep(&gate, &detunings, &model, true, &SweepPath::Fast, Execution::Parallel).unwrap();
        let sim = detuning_sweep(&gate, &detunings, &model, true, &slow, Execution::Parallel).unwrap();
        for (f, s) in fast.iter().zip(&sim) {
            let err = s.stderr.expect("fit succeeded");
            assert!((f.epg - s.epg).abs() <= 2.0 * err, "{name} at {:e}: fast {:e}, simulated {:e} ± {err:e}", f.detuning, f.epg, s.epg);
        }
    }
}

#[test]
fn shallow_decays_report_fit_errors() {
    let model = QubitModel::ideal_qubit();
    let gate = PulseGate::new(gaussian_envelope(T, T / 8.0, GRID_DT, FRAC_PI_2).unwrap());
    let slow = SweepPath::Simulated {
        lengths: vec![1, 2, 4, 8],
        n_sequences: 4,
        seed: 1,
    };
    let pts = detuning_sweep(&gate, &[0.0], &model, false, &slow, Execution::Sequential).unwrap();
    assert!(pts[0].epg.is_nan() || pts[0].epg.abs() < 1e-9);
}

#[test]
fn results_do_not_depend_on_execution_mode() {
    let (_, env) = pulses().remove(1);
    let gate = GateImplementation::Pulse(PulseGate::new(env));
    let mut opts = SpectatorOptions::new(presets::q0q1());
    opts.shots = Some(500);
    opts.average_flips = false;
    let mut c = RbConfig::new(RbMode::Spectator(opts), presets::q0(), gate, 42);
    c.lengths = vec![1, 4, 16, 43];
    c.n_sequences = 24;
    c.execution = Execution::Sequential;
    let a = spectator_rb(&c).unwrap();
    c.execution = Execution::Parallel;
    let b = spectator_rb(&c).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    for v in a.averaged.survival_per_seq.iter().flatten() {
        assert!((v * 500.0 - (v * 500.0).round()).abs() < 1e-9);
    }
}

#[test]
fn sampled_and_averaged_flips_agree_on_average() {
    let (_, env) = pulses().remove(1);
    let gate = GateImplementation::Pulse(PulseGate::new(env));
    let model = presets::q0().with_levels(2);
    let mean_survival = |average: bool| {
        let mut opts = SpectatorOptions::new(presets::q0q1());
        opts.average_flips = average;
        let mut c = RbConfig::new(RbMode::Spectator(opts), model.clone(), gate.clone(), 8);
        c.lengths = vec![5, 20];
        c.n_sequences = 400;
        simulate_rb(&c).unwrap().survival_mean
    };
    let (a, s) = (mean_survival(true), mean_survival(false));
    for (x, y) in a.iter().zip(&s) {
        assert!((x - y).abs() < 0.03, "{a:?} {s:?}");
    }
}

#[test]
fn rb_json_has_documented_fields() {
    let c = RbConfig::new(RbMode::Leakage, presets::q0(), GateImplementation::Ideal, 4);
    let r = simulate_rb(&c).unwrap();
    let v: serde_json::Value = serde_json::to_value(&r).unwrap();
    for key in ["mode", "lengths", "survival_mean", "survival_per_seq", "fit", "epg", "lpg"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    for key in ["A", "p", "B", "stderr"] {
        assert!(v["fit"].get(key).is_some(), "missing fit.{key}");
    }
}
