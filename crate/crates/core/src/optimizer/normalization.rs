//! Mapping between published dimensionless coefficients and physical units.
//!
//! Published values `A_n` are read as `Ω(t) = k Σ A_n ((t − T/2)/s)^n cos²(π(t − T/2)/T)`
//! with an unknown time unit `s` and amplitude unit `k`. For each trial `s`, `k` follows
//! from the area condition `Θ(T) = π/2`; `s` is then the root of `I_cos = 0` closest to
//! 1 ns, found by a scan plus bisection.

use serde::{Deserialize, Serialize};

use crate::error::{DcgError, Result};
use crate::magnus::{magnus_first, TARGET_ANGLE};
use crate::waveforms::AnsatzParams;

/// Published optimal coefficients `(A₀, A₁, A₂)`.
pub const TABLE_COEFFICIENTS: [f64; 3] = [0.31831, 0.0, -0.00515];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableNormalization {
    pub table: Vec<f64>,
    pub duration: f64,
    /// Time unit `s` in seconds.
    pub time_unit: f64,
    /// Amplitude unit `k` in rad/s per table unit.
    pub amplitude_unit: f64,
}

impl TableNormalization {
    /// Physical coefficients `a_n = k A_n / s^n`.
    pub fn params(&self) -> AnsatzParams {
        physical(&self.table, self.duration, self.time_unit, self.amplitude_unit)
    }

    /// Expresses physical coefficients in table units, `A_n = a_n s^n / k`.
    pub fn to_table_units(&self, params: &AnsatzParams) -> Vec<f64> {
        params
            .coefficients
            .iter()
            .enumerate()
            .map(|(n, a)| a * self.time_unit.powi(n as i32) / self.amplitude_unit)
            .collect()
    }
}

fn physical(table: &[f64], duration: f64, s: f64, k: f64) -> AnsatzParams {
    AnsatzParams::new(
        table.iter().enumerate().map(|(n, a)| k * a / s.powi(n as i32)).collect(),
        duration,
    )
}

/// Amplitude unit giving `Θ(T) = π/2` for time unit `s`, and the resulting `I_cos/T`.
fn probe(table: &[f64], duration: f64, s: f64) -> Result<(f64, f64)> {
    let unit = physical(table, duration, s, 1.0).total_angle();
    if unit == 0.0 {
        return Err(DcgError::DegenerateScale("table coefficients give zero area".into()));
    }
    let k = TARGET_ANGLE / unit;
    let r = magnus_first(&physical(table, duration, s, k))?;
    Ok((k, r.i_cos / duration))
}

pub fn resolve_table_normalization(table: &[f64], duration: f64) -> Result<TableNormalization> {
    const SCAN: usize = 400;
    let (lo, hi) = (0.25e-9f64, 4e-9f64);
    let grid: Vec<f64> = (0..=SCAN)
        .map(|i| lo * (hi / lo).powf(i as f64 / SCAN as f64))
        .collect();
    let values: Vec<f64> = grid
        .iter()
        .map(|&s| probe(table, duration, s).map(|p| p.1))
        .collect::<Result<_>>()?;
    let mut best: Option<f64> = None;
    for i in 0..SCAN {
        if values[i] == 0.0 || values[i].signum() != values[i + 1].signum() {
            let (mut a, mut b, mut fa) = (grid[i], grid[i + 1], values[i]);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let fm = probe(table, duration, m)?.1;
                if fm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if fm.signum() == fa.signum() {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
                if b - a < 1e-16 * b {
                    break;
                }
            }
            let root = 0.5 * (a + b);
            if best.is_none_or(|r| (root - 1e-9).abs() < (r - 1e-9).abs()) {
                best = Some(root);
            }
        }
    }
    let s = best.ok_or_else(|| DcgError::Calibration("no time unit cancels the first-order term".into()))?;
    let (k, _) = probe(table, duration, s)?;
    Ok(TableNormalization {
        table: table.to_vec(),
        duration,
        time_unit: s,
        amplitude_unit: k,
    })
}
