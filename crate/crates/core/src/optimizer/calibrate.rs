//! Scalar calibrations of a pulse in simulation: amplitude scale and DRAG weight.
//!
//! Both run on the coherent part of the model; decoherence barely moves either optimum.

use serde::{Deserialize, Serialize};

use crate::benchmarking::protocols::{amplitude_observable, drag_observable, negative_channel, NegativeRotation};
use crate::error::{DcgError, Result};
use crate::gate::PulseGate;
use crate::model::QubitModel;
use crate::quantum::GateChannel;
use crate::waveforms::Envelope;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DragCriterion {
    /// Maximize the average gate fidelity against `X_π/2`.
    #[default]
    Fidelity,
    /// Zero the `⟨σx⟩` signal of `(X_π/2 X_−π/2)^n`.
    PhaseError { repetitions: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    /// Largest odd repetition count for the amplitude sequence.
    pub n_max: usize,
    pub drag_criterion: DragCriterion,
    /// Half-width of the DRAG weight scan, seconds.
    pub drag_range: f64,
    pub drag_scan_points: usize,
    pub max_rounds: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            n_max: 21,
            drag_criterion: DragCriterion::Fidelity,
            drag_range: 2e-9,
            drag_scan_points: 41,
            max_rounds: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRound {
    pub round: usize,
    pub amplitude_scale: f64,
    pub drag_beta: f64,
    pub infidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub gate: PulseGate,
    pub rounds: Vec<CalibrationRound>,
    pub converged: bool,
}

fn coherent_channel(gate: &PulseGate, model: &QubitModel) -> Result<GateChannel> {
    Ok(GateChannel::Unitary(gate.unitary(&model.without_decoherence())?))
}

/// Root of `f` in `[a, b]` by the Illinois variant of regula falsi, or `None`
/// when the endpoints do not bracket a sign change.
fn find_root(mut f: impl FnMut(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<Option<f64>> {
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    if fa == 0.0 {
        return Ok(Some(a));
    }
    if fb == 0.0 {
        return Ok(Some(b));
    }
    if fa.signum() == fb.signum() {
        return Ok(None);
    }
    let mut side = 0;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        if !(c > a.min(b) && c < a.max(b)) || (b - a).abs() <= 1e-15 * c.abs().max(1e-300) {
            return Ok(Some(c.clamp(a.min(b), a.max(b))));
        }
        let fc = f(c)?;
        if fc == 0.0 {
            return Ok(Some(c));
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa /= 2.0;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb /= 2.0;
            }
            side = 1;
        }
    }
    Ok(Some((a * fb - b * fa) / (fb - fa)))
}

/// Amplitude scale (absolute) for which `(X_π/2)^n` leaves ground population 0.5,
/// refined over odd `n = 1, 3, …, n_max` with brackets of `±0.9/n` around the running estimate.
pub fn calibrate_gate_amplitude(gate: &PulseGate, model: &QubitModel, n_max: usize) -> Result<f64> {
    if n_max < 3 || n_max % 2 == 0 {
        return Err(DcgError::Config(format!("n_max must be odd and at least 3, got {n_max}")));
    }
    let mut estimate = gate.amplitude_scale;
    for n in (1..=n_max).step_by(2) {
        let half = 0.9 / n as f64 * estimate.abs();
        let f = |s: f64| -> Result<f64> {
            let ch = coherent_channel(&gate.clone().with_scale(s), model)?;
            Ok(amplitude_observable(&ch, n)? - 0.5)
        };
        estimate = find_root(f, estimate - half, estimate + half)?.ok_or_else(|| {
            DcgError::Calibration(format!("no amplitude root in [{:.4}, {:.4}] at n = {n}", estimate - half, estimate + half))
        })?;
    }
    Ok(estimate)
}

pub fn calibrate_amplitude(env: &Envelope, model: &QubitModel, n_max: usize) -> Result<f64> {
    calibrate_gate_amplitude(&PulseGate::new(env.clone()), model, n_max)
}

fn golden_section(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// DRAG weight (seconds) for a three-level model, keeping the gate's amplitude scale.
pub fn calibrate_gate_drag(
    gate: &PulseGate,
    model: &QubitModel,
    criterion: DragCriterion,
    range: f64,
    points: usize,
) -> Result<f64> {
    if model.levels != 3 {
        return Err(DcgError::UnsupportedModel("DRAG calibration needs a three-level model".into()));
    }
    if points < 3 || !(range > 0.0) {
        return Err(DcgError::Config("DRAG scan needs a positive range and at least 3 points".into()));
    }
    let grid: Vec<f64> = (0..points)
        .map(|i| -range + 2.0 * range * i as f64 / (points - 1) as f64)
        .collect();
    let step = grid[1] - grid[0];
    match criterion {
        DragCriterion::Fidelity => {
            let cost = |beta: f64| gate.clone().with_drag(beta).infidelity(&model.without_decoherence());
            let values: Vec<f64> = grid.iter().map(|&b| cost(b)).collect::<Result<_>>()?;
            let best = (0..points).min_by(|&i, &j| values[i].total_cmp(&values[j])).unwrap();
            if best == 0 || best == points - 1 {
                return Err(DcgError::Calibration(format!(
                    "DRAG optimum at the edge of ±{range:e} s; no bracket"
                )));
            }
            golden_section(cost, grid[best] - step, grid[best] + step, 1e-4 * step)
        }
        DragCriterion::PhaseError { repetitions } => {
            let coherent = model.without_decoherence();
            let signal = |beta: f64| -> Result<f64> {
                let g = gate.clone().with_drag(beta);
                let plus = g.channel(&coherent)?;
                let minus = negative_channel(&g, &coherent, NegativeRotation::VirtualZ)?;
                drag_observable(&plus, &minus, repetitions.max(1))
            };
            let values: Vec<f64> = grid.iter().map(|&b| signal(b)).collect::<Result<_>>()?;
            let mut best: Option<(f64, f64)> = None;
            for i in 0..points - 1 {
                if values[i].signum() != values[i + 1].signum() {
                    let root = find_root(signal, grid[i], grid[i + 1])?.unwrap_or(grid[i]);
                    if best.is_none_or(|(r, _)| root.abs() < r.abs()) {
                        best = Some((root, 0.0));
                    }
                }
            }
            best.map(|b| b.0)
                .ok_or_else(|| DcgError::Calibration(format!("no ⟨σx⟩ sign change within ±{range:e} s")))
        }
    }
}

pub fn calibrate_drag_weight(env: &Envelope, model: &QubitModel) -> Result<f64> {
    let o = CalibrationOptions::default();
    calibrate_gate_drag(&PulseGate::new(env.clone()), model, o.drag_criterion, o.drag_range, o.drag_scan_points)
}

/// Alternates amplitude and DRAG calibrations until both stop changing.
pub fn calibrate_gate(env: &Envelope, model: &QubitModel, opts: &CalibrationOptions) -> Result<CalibrationReport> {
    let coherent = model.without_decoherence();
    let mut gate = PulseGate::new(env.clone());
    let mut rounds = Vec::new();
    let mut converged = false;
    for round in 1..=opts.max_rounds {
        let scale = calibrate_gate_amplitude(&gate, &coherent, opts.n_max)?;
        gate.amplitude_scale = scale;
        let beta = if coherent.levels == 3 {
            calibrate_gate_drag(&gate, &coherent, opts.drag_criterion, opts.drag_range, opts.drag_scan_points)?
        } else {
            0.0
        };
        let moved_beta = (beta - gate.drag_beta).abs();
        gate.drag_beta = beta;
        let prev = rounds.last().map(|r: &CalibrationRound| r.amplitude_scale);
        rounds.push(CalibrationRound {
            round,
            amplitude_scale: scale,
            drag_beta: beta,
            infidelity: gate.infidelity(&coherent)?,
        });
        if let Some(p) = prev {
            if (scale - p).abs() < 1e-9 && moved_beta < 1e-14 {
                converged = true;
                break;
            }
        }
    }
    Ok(CalibrationReport {
        gate,
        rounds,
        converged,
    })
}
