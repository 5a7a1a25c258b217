//! Three-segment CORPSE composite rotations built from flat-top raised-cosine pulses.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::envelope::{Envelope, MAX_GRID_STEPS};
use crate::error::{DcgError, Result};
use crate::linalg::C64;

/// Segment angles `(θ₁, θ₂, θ₃)` for a net rotation `θ` with windings `(n₁, n₂, n₃)`.
pub fn corpse_angles(theta: f64, n1: i32, n2: i32, n3: i32) -> Result<(f64, f64, f64)> {
    let k = ((theta / 2.0).sin() / 2.0).asin();
    let t1 = 2.0 * n1 as f64 * PI + theta / 2.0 - k;
    let t2 = 2.0 * n2 as f64 * PI - 2.0 * k;
    let t3 = 2.0 * n3 as f64 * PI + theta / 2.0 - k;
    if t1 <= 0.0 || t2 <= 0.0 || t3 <= 0.0 {
        return Err(DcgError::InfeasibleWinding(format!(
            "windings ({n1}, {n2}, {n3}) give angles ({t1:.4}, {t2:.4}, {t3:.4}) rad"
        )));
    }
    Ok((t1, t2, t3))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpseSpec {
    pub target_angle: f64,
    pub windings: [i32; 3],
    pub phases: [f64; 3],
    pub rise_time: f64,
    pub peak_amplitude: f64,
}

impl CorpseSpec {
    /// `X_θ` with windings (1, 1, 1) and phases {0, π, 0}.
    pub fn standard(target_angle: f64, rise_time: f64, peak_amplitude: f64) -> Self {
        Self {
            target_angle,
            windings: [1, 1, 1],
            phases: [0.0, PI, 0.0],
            rise_time,
            peak_amplitude,
        }
    }

    pub fn angles(&self) -> Result<(f64, f64, f64)> {
        let [n1, n2, n3] = self.windings;
        corpse_angles(self.target_angle, n1, n2, n3)
    }
}

/// Flat-top raised-cosine segment of area `angle`. The segment is stretched to a whole
/// number of grid steps and its height rescaled so the sampled area is exactly `angle`.
pub fn flat_top_segment(angle: f64, peak: f64, rise_time: f64, dt: f64) -> Result<Vec<f64>> {
    if !(peak > 0.0) {
        return Err(DcgError::AmplitudeTooLow(format!("peak amplitude {peak:e} must be positive")));
    }
    if rise_time < 0.0 {
        return Err(DcgError::Config(format!("negative rise time {rise_time:e}")));
    }
    // Area of rise + fall is peak·rise, so the flat part lasts angle/peak − rise.
    let flat = angle / peak - rise_time;
    if flat < -1e-12 * rise_time.max(dt) {
        return Err(DcgError::AmplitudeTooLow(format!(
            "segment angle {angle:.4} rad is too small for {rise_time:e} s ramps at peak {peak:e} rad/s (flat length {flat:e} s)"
        )));
    }
    let length = 2.0 * rise_time + flat.max(0.0);
    let steps = ((length / dt) - 1e-9).ceil().max(1.0);
    if steps > MAX_GRID_STEPS as f64 {
        return Err(DcgError::Grid(format!(
            "segment of {length:e} s needs {steps} steps, above the limit of {MAX_GRID_STEPS}"
        )));
    }
    let steps = steps as usize;
    let window = steps as f64 * dt;
    let shape = |t: f64| {
        if rise_time == 0.0 {
            1.0
        } else if t < rise_time {
            0.5 * (1.0 - (PI * t / rise_time).cos())
        } else if t > window - rise_time {
            0.5 * (1.0 - (PI * (window - t) / rise_time).cos())
        } else {
            1.0
        }
    };
    let raw: Vec<f64> = (0..steps).map(|k| shape((k as f64 + 0.5) * dt)).collect();
    let area: f64 = raw.iter().sum::<f64>() * dt;
    if !(area > 0.0) {
        return Err(DcgError::AmplitudeTooLow("segment shorter than one grid step".into()));
    }
    let scale = angle / area;
    Ok(raw.into_iter().map(|x| x * scale).collect())
}

/// Unit phasor with exact values at multiples of π/2, so real segments stay real.
fn phasor(phi: f64) -> C64 {
    let quarter = phi / (PI / 2.0);
    if (quarter - quarter.round()).abs() < 1e-12 {
        match (quarter.round() as i64).rem_euclid(4) {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        }
    } else {
        C64::from_polar(1.0, phi)
    }
}

pub fn corpse_envelope(spec: &CorpseSpec, dt: f64) -> Result<Envelope> {
    let (t1, t2, t3) = spec.angles()?;
    let mut samples = Vec::new();
    for (angle, phi) in [t1, t2, t3].into_iter().zip(spec.phases) {
        let p = phasor(phi);
        samples.extend(
            flat_top_segment(angle, spec.peak_amplitude, spec.rise_time, dt)?
                .into_iter()
                .map(|x| p * x),
        );
        if samples.len() > MAX_GRID_STEPS {
            return Err(DcgError::Grid(format!("CORPSE envelope exceeds {MAX_GRID_STEPS} steps")));
        }
    }
    Ok(Envelope::new(samples, dt))
}
