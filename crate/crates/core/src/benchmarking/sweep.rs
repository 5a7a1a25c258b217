//! Gate error versus drive detuning.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::rb::{simulate_rb, GateImplementation, RbConfig, RbMode};
use crate::error::{DcgError, Result};
use crate::gate::PulseGate;
use crate::model::{rad_per_s_to_mhz, QubitModel};
use crate::parallel::{try_map_indexed, Execution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepPath {
    /// Average gate infidelity of the detuned pulse channel.
    Fast,
    /// Interleaved RB with only the interleaved gate detuned.
    Simulated { lengths: Vec<usize>, n_sequences: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// rad/s
    pub detuning: f64,
    pub epg: f64,
    /// Fit standard error; absent on the fast path.
    pub stderr: Option<f64>,
    /// Set when the simulated decays could not be fitted; `epg` is then NaN.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_error: Option<String>,
}

fn point(gate: &PulseGate, detuning: f64, model: &QubitModel, path: &SweepPath) -> Result<SweepPoint> {
    match path {
        SweepPath::Fast => Ok(SweepPoint {
            detuning,
            epg: gate.infidelity(&model.with_detuning(model.detuning + detuning))?,
            stderr: None,
            fit_error: None,
        }),
        SweepPath::Simulated {
            lengths,
            n_sequences,
            seed,
        } => {
            let mut config = RbConfig::new(
                RbMode::Interleaved,
                model.clone(),
                GateImplementation::Pulse(gate.clone()),
                *seed,
            );
            config.lengths = lengths.clone();
            config.n_sequences = *n_sequences;
            config.interleaved_detuning = detuning;
            // Detunings are already spread over workers.
            config.execution = Execution::Sequential;
            let r = simulate_rb(&config)?;
            Ok(match r.epg {
                Some(rate) => SweepPoint {
                    detuning,
                    epg: rate.value,
                    stderr: Some(rate.stderr),
                    fit_error: None,
                },
                None => SweepPoint {
                    detuning,
                    epg: f64::NAN,
                    stderr: None,
                    fit_error: Some(
                        r.fit_error
                            .or_else(|| r.reference.and_then(|c| c.fit_error))
                            .unwrap_or_else(|| "fit failed".into()),
                    ),
                },
            })
        }
    }
}

pub fn detuning_sweep(
    gate: &PulseGate,
    detunings: &[f64],
    model: &QubitModel,
    with_decoherence: bool,
    path: &SweepPath,
    execution: Execution,
) -> Result<Vec<SweepPoint>> {
    if detunings.iter().any(|d| !d.is_finite()) {
        return Err(DcgError::Config("non-finite detuning".into()));
    }
    let model = if with_decoherence {
        model.clone()
    } else {
        model.without_decoherence()
    };
    try_map_indexed(execution, detunings.len(), |i| point(gate, detunings[i], &model, path))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "detuning_MHz")]
    pub detuning_mhz: f64,
    pub epg_nodecoherence: f64,
    pub epg_decoherence: f64,
}

/// Both columns of the sweep, with and without the model's dissipation.
pub fn sweep_table(
    gate: &PulseGate,
    detunings: &[f64],
    model: &QubitModel,
    path: &SweepPath,
    execution: Execution,
) -> Result<Vec<SweepRow>> {
    let clean = detuning_sweep(gate, detunings, model, false, path, execution)?;
    let noisy = detuning_sweep(gate, detunings, model, true, path, execution)?;
    Ok(clean
        .iter()
        .zip(&noisy)
        .map(|(c, n)| SweepRow {
            detuning_mhz: rad_per_s_to_mhz(c.detuning),
            epg_nodecoherence: c.epg,
            epg_decoherence: n.epg,
        })
        .collect())
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}
