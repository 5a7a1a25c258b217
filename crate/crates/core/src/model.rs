//! Qubit and qubit-pair models, plus the built-in device presets.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{DcgError, Result};

/// Converts a frequency in MHz to an angular frequency in rad/s.
pub fn mhz_to_rad_per_s(mhz: f64) -> f64 {
    2.0 * PI * mhz * 1e6
}

pub fn rad_per_s_to_mhz(w: f64) -> f64 {
    w / (2.0 * PI * 1e6)
}

/// A single transmon truncated to two or three levels, in the drive's rotating frame.
///
/// Coherence times of `None` mean "infinite". All angular quantities are in rad/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitModel {
    pub levels: usize,
    pub anharmonicity: f64,
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub thermal_excitation: f64,
    pub detuning: f64,
    /// Qubit frequency in GHz; metadata only.
    #[serde(default)]
    pub frequency_ghz: Option<f64>,
    /// Readout assignment error; metadata only unless explicitly applied.
    #[serde(default)]
    pub readout_error: Option<f64>,
}

impl QubitModel {
    /// Ideal two-level qubit with no decoherence.
    pub fn ideal_qubit() -> Self {
        Self {
            levels: 2,
            anharmonicity: 0.0,
            t1: None,
            t2: None,
            thermal_excitation: 0.0,
            detuning: 0.0,
            frequency_ghz: None,
            readout_error: None,
        }
    }

    /// Ideal three-level transmon with the given anharmonicity (rad/s).
    pub fn ideal_transmon(anharmonicity: f64) -> Self {
        Self {
            levels: 3,
            anharmonicity,
            ..Self::ideal_qubit()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.levels) {
            return Err(DcgError::UnsupportedModel(format!(
                "{} levels (only 2 or 3 supported)",
                self.levels
            )));
        }
        for (name, v) in [("T1", self.t1), ("T2", self.t2)] {
            if let Some(t) = v {
                if !(t > 0.0) || !t.is_finite() {
                    return Err(DcgError::InvalidModel(format!("{name} must be positive, got {t}")));
                }
            }
        }
        if let (Some(t1), Some(t2)) = (self.t1, self.t2) {
            if t2 > 2.0 * t1 * (1.0 + 1e-12) {
                return Err(DcgError::InvalidModel(format!(
                    "T2 = {t2:e} s exceeds 2·T1 = {:e} s",
                    2.0 * t1
                )));
            }
        }
        if self.t1.is_none() && self.t2.is_some() {
            // Pure dephasing only; allowed.
        }
        if !(0.0..1.0).contains(&self.thermal_excitation) {
            return Err(DcgError::InvalidModel(format!(
                "thermal excitation {} outside [0, 1)",
                self.thermal_excitation
            )));
        }
        if !self.detuning.is_finite() || !self.anharmonicity.is_finite() {
            return Err(DcgError::InvalidModel("non-finite frequency parameter".into()));
        }
        Ok(())
    }

    pub fn with_detuning(&self, detuning: f64) -> Self {
        Self {
            detuning,
            ..self.clone()
        }
    }

    pub fn with_anharmonicity(&self, anharmonicity: f64) -> Self {
        Self {
            anharmonicity,
            ..self.clone()
        }
    }

    pub fn with_levels(&self, levels: usize) -> Self {
        Self {
            levels,
            ..self.clone()
        }
    }

    /// Same Hamiltonian, no dissipation of any kind.
    pub fn without_decoherence(&self) -> Self {
        Self {
            t1: None,
            t2: None,
            thermal_excitation: 0.0,
            ..self.clone()
        }
    }

    pub fn without_thermal(&self) -> Self {
        Self {
            thermal_excitation: 0.0,
            ..self.clone()
        }
    }

    pub fn has_dissipation(&self) -> bool {
        self.t1.is_some() || self.t2.is_some()
    }

    /// Total energy relaxation rate `1/T1` (zero for infinite T1).
    pub fn relaxation_rate(&self) -> f64 {
        self.t1.map_or(0.0, |t| 1.0 / t)
    }

    /// Pure dephasing rate `1/T2 − 1/(2T1)`.
    pub fn pure_dephasing_rate(&self) -> f64 {
        let t2 = self.t2.map_or(0.0, |t| 1.0 / t);
        (t2 - 0.5 * self.relaxation_rate()).max(0.0)
    }

    /// Ratio `r = Γ↑/Γ↓` for which the undriven steady state has
    /// `1 − P(0) = thermal_excitation` under ladder-operator relaxation.
    pub fn thermal_ratio(&self) -> f64 {
        let p = self.thermal_excitation;
        if p == 0.0 {
            return 0.0;
        }
        let odds = p / (1.0 - p);
        match self.levels {
            2 => odds,
            // 1 − P0 = (r + r²)/(1 + r + r²)  ⇒  r² + r − odds = 0
            _ => (-1.0 + (1.0 + 4.0 * odds).sqrt()) / 2.0,
        }
    }

    /// Downward and upward jump rates. Their sum is `1/T1`.
    pub fn jump_rates(&self) -> (f64, f64) {
        let gamma = self.relaxation_rate();
        let r = self.thermal_ratio();
        let down = gamma / (1.0 + r);
        (down, down * r)
    }
}

/// Target qubit plus one spectator coupled by a static ZZ term
/// `ξ_ZZ σz0 ⊗ σz1 / 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairModel {
    pub target: QubitModel,
    pub spectator: QubitModel,
    pub zz_strength: f64,
}

impl PairModel {
    pub fn validate(&self) -> Result<()> {
        self.target.validate()?;
        self.spectator.validate()?;
        if !self.zz_strength.is_finite() {
            return Err(DcgError::InvalidModel("non-finite ZZ strength".into()));
        }
        Ok(())
    }

    /// Target detuning seen while the spectator sits in computational state `s`,
    /// in the bare rotating frame: `ξ + (−1)^s ξ_ZZ`.
    pub fn branch_detuning(&self, spectator_state: usize) -> f64 {
        let sign = if spectator_state % 2 == 0 { 1.0 } else { -1.0 };
        self.target.detuning + sign * self.zz_strength
    }
}

/// Device presets.
pub mod presets {
    use super::*;

    pub const NAMES: [&str; 3] = ["Q0", "Q1", "Q0Q1"];

    pub fn q0() -> QubitModel {
        QubitModel {
            levels: 3,
            anharmonicity: -mhz_to_rad_per_s(432.0),
            t1: Some(13.2e-6),
            t2: Some(10.4e-6),
            thermal_excitation: 0.055,
            detuning: 0.0,
            frequency_ghz: Some(8.508),
            readout_error: Some(0.038),
        }
    }

    pub fn q1() -> QubitModel {
        QubitModel {
            levels: 3,
            anharmonicity: -mhz_to_rad_per_s(357.0),
            t1: Some(25.3e-6),
            t2: Some(15.9e-6),
            thermal_excitation: 0.087,
            detuning: 0.0,
            frequency_ghz: Some(7.943),
            readout_error: Some(0.033),
        }
    }

    pub fn q0q1() -> PairModel {
        PairModel {
            target: q0(),
            spectator: q1(),
            zz_strength: -mhz_to_rad_per_s(0.73),
        }
    }

    pub fn qubit(name: &str) -> Result<QubitModel> {
        match name {
            "Q0" => Ok(q0()),
            "Q1" => Ok(q1()),
            "Q0Q1" => Ok(q0()),
            other => Err(DcgError::Config(format!("unknown preset {other:?}"))),
        }
    }

    pub fn pair(name: &str) -> Result<PairModel> {
        match name {
            "Q0Q1" => Ok(q0q1()),
            other => Err(DcgError::Config(format!("preset {other:?} is not a qubit pair"))),
        }
    }
}
