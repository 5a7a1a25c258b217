use super::envelope::{grid_steps, Envelope};
use crate::error::{DcgError, Result};
use crate::linalg::C64;

/// Default width as a fraction of the gate length.
pub const DEFAULT_SIGMA_FRACTION: f64 = 1.0 / 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianShape {
    pub sigma: f64,
    /// Subtract the value at the window edge so the pulse starts and ends at zero.
    pub subtract_baseline: bool,
}

impl GaussianShape {
    pub fn with_default_sigma(duration: f64) -> Self {
        Self {
            sigma: duration * DEFAULT_SIGMA_FRACTION,
            subtract_baseline: true,
        }
    }
}

/// Gaussian centred on `T/2`, truncated to `[0, T]`, baseline-subtracted and
/// scaled so that `∫Ω dt = target_angle` on the sampling grid.
pub fn gaussian_envelope(duration: f64, sigma: f64, dt: f64, target_angle: f64) -> Result<Envelope> {
    gaussian_envelope_with(
        duration,
        GaussianShape {
            sigma,
            subtract_baseline: true,
        },
        dt,
        target_angle,
    )
}

pub fn gaussian_envelope_with(duration: f64, shape: GaussianShape, dt: f64, target_angle: f64) -> Result<Envelope> {
    if !(shape.sigma > 0.0) {
        return Err(DcgError::Config(format!("sigma must be positive, got {}", shape.sigma)));
    }
    if target_angle == 0.0 {
        return Err(DcgError::DegenerateScale("cannot normalize a Gaussian to zero area".into()));
    }
    let n = grid_steps(duration, dt)?;
    let centre = duration / 2.0;
    let two_var = 2.0 * shape.sigma * shape.sigma;
    let baseline = if shape.subtract_baseline {
        (-(centre * centre) / two_var).exp()
    } else {
        0.0
    };
    let raw: Vec<f64> = (0..n)
        .map(|k| {
            let s = (k as f64 + 0.5) * dt - centre;
            (-(s * s) / two_var).exp() - baseline
        })
        .collect();
    let area: f64 = raw.iter().sum::<f64>() * dt;
    if !(area.abs() > 0.0) || !area.is_finite() {
        return Err(DcgError::DegenerateScale(format!("Gaussian area {area:e} cannot be normalized")));
    }
    let scale = target_angle / area;
    Ok(Envelope::new(raw.into_iter().map(|x| C64::new(x * scale, 0.0)).collect(), dt))
}
