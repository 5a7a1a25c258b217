use std::fs;
use std::path::Path;

use anyhow::Context;
use dcg_core::gate::PulseGate;
use dcg_core::model::{presets, PairModel, QubitModel};
use dcg_core::optimizer::{
    calibrate_gate, optimize_pulse, resolve_table_normalization, CalibrationOptions, OptimizeOptions,
    TABLE_COEFFICIENTS,
};
use dcg_core::waveforms::{ansatz_envelope, gaussian_envelope, AnsatzParams, Envelope, GRID_DT};
use serde::Deserialize;

use crate::args::{GateArgs, ModelArgs, PulseArgs};
use crate::support::{usage, Failure};

pub const NS: f64 = 1e-9;

#[derive(Deserialize)]
struct SynthFile {
    params: AnsatzParams,
}

pub fn envelope(p: &PulseArgs) -> Result<Envelope, Failure> {
    let duration = p.duration_ns * NS;
    if !(duration > 0.0) {
        return Err(usage("--duration-ns must be positive"));
    }
    let env = match p.pulse.as_str() {
        "optimal" => {
            let r = optimize_pulse(&OptimizeOptions::new(duration, p.degree))?;
            ansatz_envelope(&r.params, GRID_DT)?
        }
        "table" => ansatz_envelope(&resolve_table_normalization(&TABLE_COEFFICIENTS, duration)?.params(), GRID_DT)?,
        "gaussian" => {
            let sigma = p.sigma_ns.map_or(duration / 8.0, |s| s * NS);
            gaussian_envelope(duration, sigma, GRID_DT, std::f64::consts::FRAC_PI_2)?
        }
        "ideal" => return Err(usage("`--pulse ideal` is only meaningful for rb")),
        path if path.ends_with(".json") => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
            let file: SynthFile = serde_json::from_str(&text).with_context(|| format!("parsing {path}"))?;
            ansatz_envelope(&file.params, GRID_DT)?
        }
        path if path.ends_with(".csv") => {
            let f = fs::File::open(path).with_context(|| format!("reading {path}"))?;
            Envelope::read_csv(f)?
        }
        other => {
            return Err(usage(format!(
                "unknown pulse {other:?}; use optimal, table, gaussian or a .json/.csv file"
            )))
        }
    };
    Ok(env)
}

fn adjust(mut m: QubitModel, a: &ModelArgs) -> QubitModel {
    if let Some(levels) = a.levels {
        m = m.with_levels(levels);
    }
    if a.no_decoherence {
        m = m.without_decoherence();
    }
    if a.no_thermal {
        m = m.without_thermal();
    }
    m
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn qubit_model(a: &ModelArgs) -> Result<QubitModel, Failure> {
    let m = match &a.model_file {
        Some(path) => read_json(path)?,
        None => presets::qubit(&a.preset).map_err(|e| usage(e.to_string()))?,
    };
    let m = adjust(m, a);
    m.validate()?;
    Ok(m)
}

pub fn pair_model(a: &ModelArgs) -> Result<PairModel, Failure> {
    let mut pair: PairModel = match &a.model_file {
        Some(path) => read_json(path)?,
        None => presets::pair(&a.preset).map_err(|e| usage(e.to_string()))?,
    };
    pair.target = adjust(pair.target, a);
    pair.validate()?;
    Ok(pair)
}

/// The pulse as a gate, either with the fixed scale and DRAG weight given or
/// calibrated on `model`.
pub fn gate(env: Envelope, g: &GateArgs, model: &QubitModel) -> Result<PulseGate, Failure> {
    if g.no_calibrate || g.scale.is_some() || g.drag_beta_ns.is_some() {
        return Ok(PulseGate::new(env)
            .with_scale(g.scale.unwrap_or(1.0))
            .with_drag(g.drag_beta_ns.unwrap_or(0.0) * NS));
    }
    let report = calibrate_gate(&env, model, &CalibrationOptions::default())?;
    if !report.converged {
        eprintln!("warning: calibration did not converge; using the last round");
    }
    Ok(report.gate)
}
