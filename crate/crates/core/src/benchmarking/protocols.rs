//! Simulated amplitude and DRAG-weight calibration sequences.
//!
//! Amplitude: `(X_π/2)^n` on `|0⟩`, ground population 0.5 for odd `n` at the optimum.
//! DRAG weight: `(X_π/2 X_−π/2)^n` on `(|0⟩ − i|1⟩)/√2`, `⟨σx⟩ = 0` at the optimum.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{DcgError, Result};
use crate::gate::{virtual_z, PulseGate};
use crate::linalg::C64;
use crate::model::QubitModel;
use crate::quantum::{embed_state, GateChannel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    AmplitudeRough,
    DragWeight,
    AmplitudeFine,
}

/// How `X_−π/2` is played.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativeRotation {
    /// `VirtualZ(π) · X_π/2 · VirtualZ(−π)`.
    #[default]
    VirtualZ,
    /// The same pulse with its sign flipped.
    PhaseInverted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolPoint {
    pub value: f64,
    pub n: usize,
    pub observable: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolTranscript {
    pub protocol: Protocol,
    pub points: Vec<ProtocolPoint>,
    /// Amplitude protocols: multiplier on the gate's current scale. DRAG: weight in seconds.
    pub calibrated: f64,
}

impl ProtocolTranscript {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for p in &self.points {
            w.serialize(p)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Ground-state population after `(X_π/2)^n` from `|0⟩`.
pub fn amplitude_observable(channel: &GateChannel, n: usize) -> Result<f64> {
    let mut rho = embed_state(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], channel.total_dim())?;
    for _ in 0..n {
        rho = channel.apply(&rho);
    }
    Ok(rho[(0, 0)].re)
}

/// `⟨σx⟩ = 2 Re ρ₀₁` after `(X_π/2 X_−π/2)^n` from `(|0⟩ − i|1⟩)/√2`.
pub fn drag_observable(plus: &GateChannel, minus: &GateChannel, n: usize) -> Result<f64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut rho = embed_state(&[C64::new(h, 0.0), C64::new(0.0, -h)], plus.total_dim())?;
    for _ in 0..n {
        rho = plus.apply(&rho);
        rho = minus.apply(&rho);
    }
    Ok(2.0 * rho[(0, 1)].re)
}

/// `X_−π/2` channel for the chosen realization.
pub fn negative_channel(gate: &PulseGate, model: &QubitModel, how: NegativeRotation) -> Result<GateChannel> {
    match how {
        NegativeRotation::VirtualZ => {
            let levels = model.levels;
            let pre = GateChannel::Unitary(virtual_z(-std::f64::consts::PI, levels));
            let post = GateChannel::Unitary(virtual_z(std::f64::consts::PI, levels));
            Ok(pre.then(&gate.channel(model)?).then(&post))
        }
        NegativeRotation::PhaseInverted => {
            let mut g = gate.clone();
            g.amplitude_scale = -g.amplitude_scale;
            g.channel(model)
        }
    }
}

/// Linear-interpolated crossings of `y = level` along a sweep.
pub fn crossings(values: &[f64], ys: &[f64], level: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..values.len().saturating_sub(1) {
        let (a, b) = (ys[i] - level, ys[i + 1] - level);
        if a == 0.0 {
            out.push(values[i]);
        } else if a.signum() != b.signum() && b != 0.0 {
            out.push(values[i] + (values[i + 1] - values[i]) * a / (a - b));
        }
    }
    if let (Some(&y), Some(&v)) = (ys.last(), values.last()) {
        if y == level {
            out.push(v);
        }
    }
    out
}

fn nearest(candidates: &[f64], target: f64) -> Option<f64> {
    candidates
        .iter()
        .cloned()
        .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
}

/// Runs one protocol over a sweep grid and a list of repetition counts.
pub fn simulate_calibration_protocols(
    gate: &PulseGate,
    model: &QubitModel,
    protocol: Protocol,
    grid: &[f64],
    ns: &[usize],
    negative: NegativeRotation,
) -> Result<ProtocolTranscript> {
    if grid.len() < 2 || ns.is_empty() {
        return Err(DcgError::Config("calibration sweep needs at least two grid values and one n".into()));
    }
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    let mut curves: Vec<Vec<f64>> = vec![Vec::with_capacity(grid.len()); ns.len()];
    for &value in grid {
        match protocol {
            Protocol::AmplitudeRough | Protocol::AmplitudeFine => {
                let g = gate.clone().with_scale(gate.amplitude_scale * value);
                let ch = g.channel(model)?;
                for (curve, &n) in curves.iter_mut().zip(&ns) {
                    curve.push(amplitude_observable(&ch, n)?);
                }
            }
            Protocol::DragWeight => {
                let g = gate.clone().with_drag(value);
                let plus = g.channel(model)?;
                let minus = negative_channel(&g, model, negative)?;
                for (curve, &n) in curves.iter_mut().zip(&ns) {
                    curve.push(drag_observable(&plus, &minus, n)?);
                }
            }
        }
    }
    let level = match protocol {
        Protocol::DragWeight => 0.0,
        _ => 0.5,
    };
    let centre = match protocol {
        Protocol::DragWeight => 0.0,
        _ => 1.0,
    };
    // Track the crossing from the least to the most amplified curve.
    let mut estimate = centre;
    for curve in &curves {
        let c = crossings(grid, curve, level);
        estimate = nearest(&c, estimate).ok_or_else(|| {
            DcgError::Calibration(format!("no crossing of {level} within the {protocol:?} sweep range"))
        })?;
    }
    let points = grid
        .iter()
        .enumerate()
        .flat_map(|(i, &value)| {
            ns.iter().zip(&curves).map(move |(&n, curve)| ProtocolPoint {
                value,
                n,
                observable: curve[i],
            })
        })
        .collect();
    Ok(ProtocolTranscript {
        protocol,
        points,
        calibrated: estimate,
    })
}

/// Evenly spaced sweep grid.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;
    use crate::waveforms::{gaussian_envelope, GRID_DT};
    use std::f64::consts::FRAC_PI_2;

    fn gaussian() -> PulseGate {
        PulseGate::new(gaussian_envelope(40e-9, 5e-9, GRID_DT, FRAC_PI_2).unwrap())
    }

    #[test]
    fn ideal_qubit_drag_crossing_at_zero() {
        let grid = linspace(-1e-9, 1e-9, 41);
        let t = simulate_calibration_protocols(
            &gaussian(),
            &QubitModel::ideal_qubit(),
            Protocol::DragWeight,
            &grid,
            &[1, 3, 5],
            NegativeRotation::VirtualZ,
        )
        .unwrap();
        assert!(t.calibrated.abs() < 1e-13, "{:e}", t.calibrated);
    }

    #[test]
    fn overscaled_pulse_fine_amplitude() {
        let g = gaussian().with_scale(1.02);
        let grid = linspace(0.95, 1.01, 121);
        let t = simulate_calibration_protocols(
            &g,
            &QubitModel::ideal_qubit(),
            Protocol::AmplitudeFine,
            &grid,
            &[1, 5, 9, 15],
            NegativeRotation::VirtualZ,
        )
        .unwrap();
        assert!((t.calibrated - 1.0 / 1.02).abs() < 1e-4, "{}", t.calibrated);
    }

    #[test]
    fn negative_rotation_realizations_agree() {
        let q = presets::q0().without_decoherence();
        let g = gaussian().with_drag(0.2e-9);
        let a = negative_channel(&g, &q, NegativeRotation::VirtualZ).unwrap();
        let b = negative_channel(&g, &q, NegativeRotation::PhaseInverted).unwrap();
        let (ua, ub) = (a.as_unitary().unwrap(), b.as_unitary().unwrap());
        assert!((ua - ub).max_abs() < 1e-12);
    }

    #[test]
    fn missing_crossing_is_calibration_error() {
        let grid = linspace(0.2, 0.4, 5);
        let r = simulate_calibration_protocols(
            &gaussian(),
            &QubitModel::ideal_qubit(),
            Protocol::AmplitudeRough,
            &grid,
            &[1],
            NegativeRotation::VirtualZ,
        );
        assert!(matches!(r, Err(DcgError::Calibration(_))));
    }

    #[test]
    fn transcript_csv_header() {
        let grid = linspace(0.9, 1.1, 3);
        let t = simulate_calibration_protocols(
            &gaussian(),
            &QubitModel::ideal_qubit(),
            Protocol::AmplitudeRough,
            &grid,
            &[1],
            NegativeRotation::VirtualZ,
        )
        .unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("value,n,observable\n"));
        assert_eq!(text.lines().count(), 4);
    }
}
