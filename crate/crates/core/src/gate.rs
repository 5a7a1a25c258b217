//! Physical `X_π/2` pulses with DRAG and amplitude calibration, and virtual-Z frame changes.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{rx, ComplexMatrix, C64};
use crate::model::QubitModel;
use crate::quantum::{average_gate_infidelity, lindblad_propagate, propagate_envelope, GateChannel};
use crate::waveforms::{drag_augment, Envelope};

/// A pulse realizing `X_π/2`: base in-phase envelope, DRAG weight and amplitude scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseGate {
    pub envelope: Envelope,
    /// DRAG weight in seconds.
    pub drag_beta: f64,
    pub amplitude_scale: f64,
}

impl PulseGate {
    pub fn new(envelope: Envelope) -> Self {
        Self {
            envelope,
            drag_beta: 0.0,
            amplitude_scale: 1.0,
        }
    }

    pub fn with_drag(mut self, beta: f64) -> Self {
        self.drag_beta = beta;
        self
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.amplitude_scale = scale;
        self
    }

    pub fn duration(&self) -> f64 {
        self.envelope.duration()
    }

    /// Envelope actually played: scaled, then DRAG-augmented.
    pub fn drive(&self) -> Result<Envelope> {
        drag_augment(&self.envelope.scaled(self.amplitude_scale), self.drag_beta)
    }

    pub fn unitary(&self, model: &QubitModel) -> Result<ComplexMatrix> {
        propagate_envelope(&self.drive()?, model)
    }

    /// Unitary channel without dissipation, Lindblad process otherwise.
    pub fn channel(&self, model: &QubitModel) -> Result<GateChannel> {
        if model.has_dissipation() {
            lindblad_propagate(&self.drive()?, model)
        } else {
            Ok(GateChannel::Unitary(self.unitary(model)?))
        }
    }

    /// Average gate infidelity against `X_π/2`.
    pub fn infidelity(&self, model: &QubitModel) -> Result<f64> {
        average_gate_infidelity(&self.channel(model)?, &x90())
    }
}

/// Ideal `X_π/2 = exp(−iπσx/4)`.
pub fn x90() -> ComplexMatrix {
    rx(FRAC_PI_2)
}

/// Frame change by `φ`: `|n⟩ → e^{inφ}|n⟩`. On a qubit this is `Rz(φ)` up to global phase.
pub fn virtual_z(phi: f64, levels: usize) -> ComplexMatrix {
    let d: Vec<C64> = (0..levels).map(|n| C64::from_polar(1.0, n as f64 * phi)).collect();
    ComplexMatrix::diagonal(&d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{phase_insensitive_distance, rz};
    use crate::waveforms::{gaussian_envelope, GRID_DT};

    #[test]
    fn virtual_z_is_rz_on_qubit() {
        for phi in [0.3, -1.2, 3.0] {
            assert!(phase_insensitive_distance(&virtual_z(phi, 2), &rz(phi)) < 1e-15);
        }
    }

    #[test]
    fn ideal_qubit_gate_is_exact() {
        let env = gaussian_envelope(40e-9, 5e-9, GRID_DT, FRAC_PI_2).unwrap();
        let g = PulseGate::new(env);
        assert!(g.infidelity(&QubitModel::ideal_qubit()).unwrap() < 1e-14);
        let over = g.clone().with_scale(1.05);
        assert!(over.infidelity(&QubitModel::ideal_qubit()).unwrap() > 1e-4);
    }
}
