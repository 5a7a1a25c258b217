use std::f64::consts::PI;
use std::fmt::Write as _;

use dcg_core::benchmarking::protocols::{linspace, simulate_calibration_protocols, NegativeRotation, Protocol};
use dcg_core::benchmarking::{
    default_lengths, simulate_rb, spectator_lengths, survival_histogram, sweep_table,
    write_histogram_csv, write_sweep_csv, GateImplementation, Rate, RbConfig, RbMode, RbResult,
    SpectatorOptions, SweepPath,
};
use dcg_core::gate::PulseGate;
use dcg_core::magnus::{summarize, MagnusSummary};
use dcg_core::model::mhz_to_rad_per_s;
use dcg_core::optimizer::{
    calibrate_gate, optimize_pulse, resolve_table_normalization, CalibrationOptions, CalibrationRound,
    OptimizeOptions, TableNormalization, TABLE_COEFFICIENTS,
};
use dcg_core::parallel::Execution;
use dcg_core::quantum::average_gate_infidelity;
use dcg_core::model::QubitModel;
use dcg_core::waveforms::{AnsatzParams, CorpseSpec, GRID_DT};
use serde::Serialize;

use crate::args::{
    CalibrateArgs, Command, CorpseArgs, NegativeArg, RbArgs, RbModeArg, SweepArgs, SweepMethod, SynthArgs,
    WaveformArgs,
};
use crate::inputs::{self, NS};
use crate::support::{parse_grid, parse_list, to_json, usage, Failure, Manifest, Outputs};

pub fn run(command: &Command) -> Result<(), Failure> {
    match command {
        Command::Synth(a) => synth(a, command),
        Command::Waveform(a) => waveform(a, command),
        Command::Sweep(a) => sweep(a, command),
        Command::Rb(a) => rb(a, command),
        Command::Corpse(a) => corpse(a, command),
        Command::Calibrate(a) => calibrate(a, command),
        Command::Replay(a) => {
            let text = std::fs::read_to_string(&a.manifest)
                .map_err(|e| usage(format!("cannot read {}: {e}", a.manifest.display())))?;
            let manifest: Manifest = serde_json::from_str(&text)
                .map_err(|e| usage(format!("invalid manifest {}: {e}", a.manifest.display())))?;
            if matches!(manifest.command, Command::Replay(_)) {
                return Err(usage("a manifest cannot record a replay"));
            }
            if manifest.dcg_version != env!("CARGO_PKG_VERSION") {
                eprintln!(
                    "warning: manifest written by dcg {}, replaying with {}",
                    manifest.dcg_version,
                    env!("CARGO_PKG_VERSION")
                );
            }
            run(&manifest.command)
        }
    }
}

fn finish(out: Outputs, command: &Command, summary: String) -> Result<(), Failure> {
    let manifest = out.commit(command)?;
    print!("{summary}");
    println!("manifest: {}", manifest.display());
    Ok(())
}

#[derive(Serialize)]
struct SynthOutput {
    params: AnsatzParams,
    coefficients_ns: Vec<f64>,
    table_units: Vec<f64>,
    normalization: TableNormalization,
    costs: MagnusSummary,
    iterations: usize,
    gradient_norm: f64,
    converged: bool,
    kink_crossings: usize,
}

fn synth(a: &SynthArgs, command: &Command) -> Result<(), Failure> {
    if a.gate != "x90" {
        return Err(usage(format!("unsupported gate {:?}; only x90 is available", a.gate)));
    }
    let duration = a.duration_ns * NS;
    if !(duration > 0.0) {
        return Err(usage("--duration-ns must be positive"));
    }
    let mut opts = OptimizeOptions::new(duration, a.degree);
    opts.weight = a.weight;
    opts.max_iterations = a.max_iter;
    let r = optimize_pulse(&opts)?;
    let normalization = resolve_table_normalization(&TABLE_COEFFICIENTS, duration)?;
    let output = SynthOutput {
        coefficients_ns: r.params.coefficients_ns(),
        table_units: normalization.to_table_units(&r.params),
        costs: summarize(&r.params, a.weight)?,
        params: r.params.clone(),
        normalization,
        iterations: r.iterations,
        gradient_norm: r.gradient_norm,
        converged: r.converged,
        kink_crossings: r.kink_crossings,
    };
    if !r.converged {
        eprintln!("warning: optimizer stopped after {} iterations without converging", r.iterations);
    }
    let mut out = Outputs::new();
    out.add(&a.out, to_json(&output)?);
    let mut s = String::new();
    let _ = writeln!(s, "table units: {:?}", output.table_units);
    let _ = writeln!(
        s,
        "C_fid {:.3e}  C_rob {:.3e}  C_tot {:.3e}",
        output.costs.c_fidelity, output.costs.c_robust, output.costs.c_total
    );
    let _ = writeln!(
        s,
        "{} iterations, |g| {:.2e}, {} kink crossings, converged: {}",
        r.iterations, r.gradient_norm, r.kink_crossings, r.converged
    );
    let _ = writeln!(s, "wrote {}", a.out.display());
    finish(out, command, s)
}

fn waveform(a: &WaveformArgs, command: &Command) -> Result<(), Failure> {
    let env = inputs::envelope(&a.pulse)?;
    let gate = PulseGate::new(env).with_scale(a.scale).with_drag(a.drag_beta_ns * NS);
    let drive = gate.drive()?;
    let mut bytes = Vec::new();
    drive.write_csv(&mut bytes)?;
    let mut out = Outputs::new();
    out.add(&a.out, bytes);
    let s = format!(
        "{} samples over {:.3} ns, area {:.9} rad, peak {:.4} MHz\nwrote {}\n",
        drive.len(),
        drive.duration() / NS,
        drive.area_x(),
        drive.peak() / (2.0 * PI * 1e6),
        a.out.display()
    );
    finish(out, command, s)
}

fn execution() -> Execution {
    Execution::Parallel
}

fn sweep(a: &SweepArgs, command: &Command) -> Result<(), Failure> {
    let detunings: Vec<f64> = parse_grid(&a.detuning_mhz)?.into_iter().map(mhz_to_rad_per_s).collect();
    let model = inputs::qubit_model(&a.model)?;
    let gate = inputs::gate(inputs::envelope(&a.pulse)?, &a.gate, &model)?;
    let path = match a.method {
        SweepMethod::Fast => SweepPath::Fast,
        SweepMethod::Simulated => SweepPath::Simulated {
            lengths: default_lengths(),
            n_sequences: a.seqs,
            seed: a.seed,
        },
    };
    let rows = sweep_table(&gate, &detunings, &model, &path, execution())?;
    let mut bytes = Vec::new();
    write_sweep_csv(&rows, &mut bytes)?;
    let mut out = Outputs::new();
    out.add(&a.out, bytes);
    let worst = rows.iter().map(|r| r.epg_decoherence).fold(f64::NAN, f64::max);
    let centre = rows
        .iter()
        .min_by(|x, y| x.detuning_mhz.abs().total_cmp(&y.detuning_mhz.abs()))
        .map(|r| (r.detuning_mhz, r.epg_nodecoherence, r.epg_decoherence));
    let failed = rows.iter().filter(|r| r.epg_decoherence.is_nan() || r.epg_nodecoherence.is_nan()).count();
    let mut s = format!("{} detunings, scale {:.6}, DRAG {:.4} ns\n", rows.len(), gate.amplitude_scale, gate.drag_beta / NS);
    if let Some((d, c, n)) = centre {
        let _ = writeln!(s, "at {d} MHz: EPG {c:.3e} coherent, {n:.3e} with decoherence");
    }
    let _ = writeln!(s, "largest EPG with decoherence {worst:.3e}");
    if failed > 0 {
        let _ = writeln!(s, "{failed} points could not be fitted (NaN)");
    }
    let _ = writeln!(s, "wrote {}", a.out.display());
    finish(out, command, s)
}

#[derive(Serialize)]
struct RbOutput<'a> {
    #[serde(flatten)]
    result: &'a RbResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    plain_epg: Option<Rate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    epg_ratio: Option<f64>,
}

fn rate_line(name: &str, r: &Option<Rate>) -> String {
    match r {
        Some(r) => format!("{name} {:.4e} ± {:.1e}{}\n", r.value, r.stderr, if r.negative { " (negative)" } else { "" }),
        None => format!("{name} unavailable\n"),
    }
}

fn rb(a: &RbArgs, command: &Command) -> Result<(), Failure> {
    let spectator = a.mode == RbModeArg::Spectator;
    let (mode, model) = if spectator {
        let pair = inputs::pair_model(&a.model)?;
        let model = pair.target.clone();
        let mut opts = SpectatorOptions::new(pair);
        opts.shots = a.shots;
        opts.random_initial = a.random_initial;
        opts.average_flips = !a.sample_flips;
        (RbMode::Spectator(opts), model)
    } else {
        if a.shots.is_some() || a.sample_flips || a.random_initial {
            return Err(usage("--shots, --sample-flips and --random-initial need --mode spectator"));
        }
        let mode = match a.mode {
            RbModeArg::Standard => RbMode::Standard,
            RbModeArg::Interleaved => RbMode::Interleaved,
            _ => RbMode::Leakage,
        };
        (mode, inputs::qubit_model(&a.model)?)
    };
    let gate = if a.pulse.pulse == "ideal" {
        GateImplementation::Ideal
    } else {
        GateImplementation::Pulse(inputs::gate(inputs::envelope(&a.pulse)?, &a.gate, &model)?)
    };
    let mut config = RbConfig::new(mode, model, gate, a.seed);
    config.lengths = match &a.lengths {
        Some(l) => parse_list(l, "length")?,
        None if spectator => spectator_lengths(),
        None => default_lengths(),
    };
    config.n_sequences = a.seqs;
    config.interleaved_detuning = mhz_to_rad_per_s(a.detuning_mhz);
    config.readout_error = a.readout_error;
    config.depolarizing_error = a.depolarizing;
    config.execution = if a.sequential { Execution::Sequential } else { execution() };
    config.validate().map_err(|e| usage(e.to_string()))?;

    let result = simulate_rb(&config)?;
    let (plain_epg, epg_ratio) = if spectator {
        let mut plain = config.clone();
        plain.mode = RbMode::Interleaved;
        let p = simulate_rb(&plain)?.epg;
        let ratio = match (&result.epg, &p) {
            (Some(s), Some(p)) => Some(s.value / p.value),
            _ => None,
        };
        (p, ratio)
    } else {
        (None, None)
    };

    let mut out = Outputs::new();
    out.add(
        &a.out,
        to_json(&RbOutput {
            result: &result,
            plain_epg,
            epg_ratio,
        })?,
    );
    if let Some(h) = &a.histogram {
        let mut bytes = Vec::new();
        write_histogram_csv(&survival_histogram(&result.lengths, &result.survival_per_seq, 0.01), &mut bytes)?;
        out.add(h, bytes);
    }

    let mut s = format!(
        "{} RB, {} sequences x {} lengths, seed {}\n",
        result.mode,
        config.n_sequences,
        config.lengths.len(),
        config.seed
    );
    if let Some(f) = &result.fit {
        let _ = writeln!(s, "fit: A {:.4} p {:.6} B {:.4}", f.a, f.p, f.b);
    }
    if let Some(e) = &result.fit_error {
        let _ = writeln!(s, "fit failed: {e}");
    }
    s += &rate_line("EPC", &result.epc);
    s += &rate_line(if result.reference.is_some() { "interleaved EPG" } else { "EPG" }, &result.epg);
    if spectator {
        s += &rate_line("EPG without spectator", &plain_epg);
        if let Some(r) = epg_ratio {
            let _ = writeln!(s, "spectator / plain: {r:.3}");
        }
    }
    if let Some(l) = &result.lpg {
        let _ = writeln!(s, "LPG {:.4e} ± {:.1e} ({:?})", l.lpg.value, l.lpg.stderr, l.method);
    }
    let _ = writeln!(s, "wrote {}", a.out.display());
    if let Some(h) = &a.histogram {
        let _ = writeln!(s, "wrote {}", h.display());
    }
    finish(out, command, s)
}

#[derive(Serialize)]
struct CorpseSummary {
    angles_pi: [f64; 3],
    duration_ns: f64,
    infidelity: f64,
}

fn corpse(a: &CorpseArgs, command: &Command) -> Result<(), Failure> {
    let windings: Vec<i32> = parse_list(&a.windings, "winding")?;
    let [n1, n2, n3] = windings[..] else {
        return Err(usage("--windings takes three integers"));
    };
    let mut spec = CorpseSpec::standard(a.angle_pi * PI, a.rise_ns * NS, mhz_to_rad_per_s(a.peak_mhz));
    spec.windings = [n1, n2, n3];
    let (t1, t2, t3) = spec.angles()?;
    let env = dcg_core::waveforms::corpse_envelope(&spec, GRID_DT)?;
    let target = dcg_core::linalg::rx(spec.target_angle);
    let u = dcg_core::quantum::propagate_envelope(&env, &QubitModel::ideal_qubit())?;
    let infidelity = average_gate_infidelity(&dcg_core::quantum::GateChannel::Unitary(u), &target)?;
    let summary = CorpseSummary {
        angles_pi: [t1 / PI, t2 / PI, t3 / PI],
        duration_ns: env.duration() / NS,
        infidelity,
    };
    let mut bytes = Vec::new();
    env.write_csv(&mut bytes)?;
    let mut out = Outputs::new();
    out.add(&a.out, bytes);
    let s = format!(
        "angles/π {:.4} {:.4} {:.4}, {:.3} ns, infidelity on resonance {:.2e}\nwrote {}\n",
        summary.angles_pi[0],
        summary.angles_pi[1],
        summary.angles_pi[2],
        summary.duration_ns,
        summary.infidelity,
        a.out.display()
    );
    finish(out, command, s)
}

#[derive(Serialize)]
struct CalibrationOutput {
    amplitude_scale: f64,
    drag_beta_ns: f64,
    infidelity: f64,
    converged: bool,
    rounds: Vec<CalibrationRound>,
    transcript_estimates: Vec<(Protocol, f64)>,
}

fn calibrate(a: &CalibrateArgs, command: &Command) -> Result<(), Failure> {
    let model = inputs::qubit_model(&a.model)?;
    let env = inputs::envelope(&a.pulse)?;
    let opts = CalibrationOptions {
        n_max: a.n_max,
        ..CalibrationOptions::default()
    };
    let report = calibrate_gate(&env, &model, &opts)?;
    let gate = &report.gate;
    let infidelity = gate.infidelity(&model)?;
    let negative = match a.negative {
        NegativeArg::VirtualZ => NegativeRotation::VirtualZ,
        NegativeArg::PhaseInverted => NegativeRotation::PhaseInverted,
    };

    let mut out = Outputs::new();
    let mut estimates = Vec::new();
    let mut csv = String::new();
    if a.transcript.is_some() {
        let fine_ns: Vec<usize> = (1..=a.n_max).step_by(4).collect();
        let beta = gate.drag_beta;
        let plans = [
            (Protocol::AmplitudeRough, linspace(0.8, 1.2, 81), vec![1, 3, 5]),
            (Protocol::DragWeight, linspace(beta - 2.0 * NS, beta + 2.0 * NS, 81), vec![1, 3, 5, 7]),
            (Protocol::AmplitudeFine, linspace(0.98, 1.02, 81), fine_ns),
        ];
        csv.push_str("protocol,value,n,observable\n");
        for (protocol, grid, ns) in plans {
            let t = simulate_calibration_protocols(gate, &model, protocol, &grid, &ns, negative)?;
            let name = match protocol {
                Protocol::AmplitudeRough => "amplitude_rough",
                Protocol::DragWeight => "drag_weight",
                Protocol::AmplitudeFine => "amplitude_fine",
            };
            for p in &t.points {
                let _ = writeln!(csv, "{name},{},{},{}", p.value, p.n, p.observable);
            }
            estimates.push((protocol, t.calibrated));
        }
    }
    let output = CalibrationOutput {
        amplitude_scale: gate.amplitude_scale,
        drag_beta_ns: gate.drag_beta / NS,
        infidelity,
        converged: report.converged,
        rounds: report.rounds.clone(),
        transcript_estimates: estimates,
    };
    out.add(&a.out, to_json(&output)?);
    if let Some(t) = &a.transcript {
        out.add(t, csv.into_bytes());
    }
    let mut s = format!(
        "scale {:.6}, DRAG weight {:.4} ns, infidelity {:.3e} after {} rounds (converged: {})\n",
        output.amplitude_scale,
        output.drag_beta_ns,
        infidelity,
        output.rounds.len(),
        output.converged
    );
    for (p, v) in &output.transcript_estimates {
        let v = if *p == Protocol::DragWeight { v / NS } else { *v };
        let _ = writeln!(s, "{p:?} sweep crossing: {v:.6}");
    }
    let _ = writeln!(s, "wrote {}", a.out.display());
    if let Some(t) = &a.transcript {
        let _ = writeln!(s, "wrote {}", t.display());
    }
    finish(out, command, s)
}
