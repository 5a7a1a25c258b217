use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{DcgError, Result};
use crate::linalg::C64;

/// Integration step used throughout: 64 steps per nanosecond.
pub const GRID_DT: f64 = 1e-9 / 64.0;

/// Upper bound on samples per waveform (about 262 µs at `GRID_DT`).
pub const MAX_GRID_STEPS: usize = 1 << 24;

/// Number of steps of size `dt` in `duration`, or a grid error if the two are
/// not commensurate.
pub fn grid_steps(duration: f64, dt: f64) -> Result<usize> {
    if !(duration > 0.0) || !(dt > 0.0) || !duration.is_finite() || !dt.is_finite() {
        return Err(DcgError::Grid(format!(
            "duration {duration:e} s and step {dt:e} s must be positive"
        )));
    }
    let ratio = duration / dt;
    let n = ratio.round();
    if (ratio - n).abs() > 1e-9 * n.max(1.0) || n < 1.0 {
        return Err(DcgError::Grid(format!(
            "duration {duration:e} s is not a whole number of {dt:e} s steps (ratio {ratio})"
        )));
    }
    if n > MAX_GRID_STEPS as f64 {
        return Err(DcgError::Grid(format!("{n} steps exceed the limit of {MAX_GRID_STEPS}")));
    }
    Ok(n as usize)
}

/// Uniformly sampled complex drive: real part drives σx/2, imaginary part σy/2.
///
/// Sample `k` holds the value at the step midpoint `(k + 1/2)·dt`. The drive
/// is zero outside `[0, duration]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub samples: Vec<C64>,
    pub dt: f64,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    t_ns: f64,
    omega_x_rad_per_s: f64,
    omega_y_rad_per_s: f64,
}

impl Envelope {
    pub fn new(samples: Vec<C64>, dt: f64) -> Self {
        Self { samples, dt }
    }

    pub fn zeros(n: usize, dt: f64) -> Self {
        Self::new(vec![C64::new(0.0, 0.0); n], dt)
    }

    /// Samples `f` at the step midpoints of `[0, duration]`.
    pub fn from_fn(duration: f64, dt: f64, f: impl Fn(f64) -> C64) -> Result<Self> {
        let n = grid_steps(duration, dt)?;
        Ok(Self::new((0..n).map(|k| f((k as f64 + 0.5) * dt)).collect(), dt))
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.dt
    }

    pub fn time_at(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.dt
    }

    pub fn is_real(&self) -> bool {
        self.samples.iter().all(|z| z.im == 0.0)
    }

    /// Midpoint-rule area of the in-phase component, `∫Ω_x dt`.
    pub fn area_x(&self) -> f64 {
        self.samples.iter().map(|z| z.re).sum::<f64>() * self.dt
    }

    pub fn area_y(&self) -> f64 {
        self.samples.iter().map(|z| z.im).sum::<f64>() * self.dt
    }

    /// Largest `|Ω|` over the samples.
    pub fn peak(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn peak_x(&self) -> f64 {
        self.samples.iter().map(|z| z.re.abs()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.samples.iter().map(|z| z * factor).collect(), self.dt)
    }

    /// Appends `other`, which must share the same step.
    pub fn concat(&self, other: &Envelope) -> Result<Self> {
        if (self.dt - other.dt).abs() > 1e-15 * self.dt {
            return Err(DcgError::Grid("cannot concatenate envelopes with different steps".into()));
        }
        let mut samples = self.samples.clone();
        samples.extend_from_slice(&other.samples);
        Ok(Self::new(samples, self.dt))
    }

    /// Cumulative in-phase rotation angle at the end of each step.
    pub fn cumulative_angle(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.samples
            .iter()
            .map(|z| {
                acc += z.re * self.dt;
                acc
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (k, z) in self.samples.iter().enumerate() {
            w.serialize(CsvRow {
                t_ns: self.time_at(k) * 1e9,
                omega_x_rad_per_s: z.re,
                omega_y_rad_per_s: z.im,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut samples = Vec::new();
        let mut times = Vec::new();
        for row in r.deserialize() {
            let row: CsvRow = row?;
            times.push(row.t_ns * 1e-9);
            samples.push(C64::new(row.omega_x_rad_per_s, row.omega_y_rad_per_s));
        }
        if times.len() < 2 {
            return Err(DcgError::Grid("envelope CSV needs at least two samples".into()));
        }
        let dt = times[1] - times[0];
        Ok(Self::new(samples, dt))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_incommensurate() {
        assert_eq!(grid_steps(40e-9, GRID_DT).unwrap(), 2560);
        assert!(matches!(grid_steps(40.003e-9, GRID_DT), Err(DcgError::Grid(_))));
        assert!(matches!(grid_steps(-1.0, GRID_DT), Err(DcgError::Grid(_))));
    }

    #[test]
    fn csv_has_expected_header_and_roundtrips() {
        let env = Envelope::new(vec![C64::new(1.5, -0.25), C64::new(2.0, 0.0), C64::new(0.0, 3.0)], GRID_DT);
        let mut buf = Vec::new();
        env.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t_ns,omega_x_rad_per_s,omega_y_rad_per_s\n"));
        assert_eq!(text.lines().count(), 4);
        let back = Envelope::read_csv(&buf[..]).unwrap();
        assert_eq!(back.samples, env.samples);
        assert!((back.dt - env.dt).abs() < 1e-24);
    }
}
