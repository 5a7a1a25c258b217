use super::envelope::Envelope;
use crate::error::{DcgError, Result};
use crate::linalg::C64;

/// Adds a quadrature `Ω_y = β dΩ_x/dt`. The derivative is a central difference with
/// the envelope taken as zero outside its window, so `∫Ω_y dt` vanishes identically.
pub fn drag_augment(env: &Envelope, beta: f64) -> Result<Envelope> {
    if !env.is_real() {
        return Err(DcgError::Contract("DRAG expects a real envelope with zero quadrature".into()));
    }
    let x: Vec<f64> = env.samples.iter().map(|z| z.re).collect();
    let n = x.len();
    let at = |k: isize| if k < 0 || k as usize >= n { 0.0 } else { x[k as usize] };
    let samples = (0..n as isize)
        .map(|k| {
            let d = (at(k + 1) - at(k - 1)) / (2.0 * env.dt);
            C64::new(x[k as usize], beta * d)
        })
        .collect();
    Ok(Envelope::new(samples, env.dt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveforms::{gaussian_envelope, GRID_DT};

    fn pulse() -> Envelope {
        gaussian_envelope(40e-9, 5e-9, GRID_DT, std::f64::consts::FRAC_PI_2).unwrap()
    }

    #[test]
    fn zero_weight_is_identity() {
        let env = pulse();
        assert_eq!(drag_augment(&env, 0.0).unwrap(), env);
    }

    #[test]
    fn in_phase_area_unchanged_and_quadrature_area_zero() {
        let env = pulse();
        let d = drag_augment(&env, 0.3e-9).unwrap();
        assert!((d.area_x() - env.area_x()).abs() < 1e-12);
        assert!(d.area_y().abs() < 1e-12);
    }

    #[test]
    fn symmetric_drive_gives_antisymmetric_quadrature() {
        let d = drag_augment(&pulse(), 0.2e-9).unwrap();
        let n = d.len();
        let scale = d.samples.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        for k in 0..n {
            assert!((d.samples[k].im + d.samples[n - 1 - k].im).abs() < 1e-9 * scale);
        }
    }

    #[test]
    fn complex_input_rejected() {
        let d = drag_augment(&pulse(), 0.2e-9).unwrap();
        assert!(matches!(drag_augment(&d, 0.1e-9), Err(DcgError::Contract(_))));
    }
}
