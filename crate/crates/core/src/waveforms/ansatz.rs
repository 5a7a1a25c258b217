//! Polynomial × cos² pulse ansatz.
//!
//! `Ω_x(t) = Σ_n a_n (t − T/2)^n · cos²(π(t − T/2)/T)` on `[0, T]`, zero elsewhere.
//!
//! Internally the coefficients are also handled in a dimensionless form,
//! `b_n = a_n (T/2)^{n+1}`, with `v = (t − T/2)/(T/2) ∈ [−1, 1]`:
//! `Ω(t) = (2/T) Σ b_n v^n cos²(πv/2)` and `Θ(t) = Σ b_n G_n(v)` where
//! `G_n(v) = ∫_{−1}^{v} w^n cos²(πw/2) dw`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::envelope::{grid_steps, Envelope};
use crate::error::{DcgError, Result};
use crate::linalg::C64;

/// Ansatz coefficients in SI units: `a_n` in rad·s^{−(n+1)}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsatzParams {
    pub coefficients: Vec<f64>,
    pub duration: f64,
    /// `free[n]` is true when `a_n` is optimized; fixed coefficients keep their value.
    pub free: Vec<bool>,
}

impl AnsatzParams {
    pub fn new(coefficients: Vec<f64>, duration: f64) -> Self {
        let free = vec![true; coefficients.len()];
        Self {
            coefficients,
            duration,
            free,
        }
    }

    /// Starting point `a_0 = π/T`, all other coefficients zero. With `symmetric`,
    /// odd coefficients are pinned to zero.
    pub fn seed(duration: f64, degree: usize, symmetric: bool) -> Self {
        let mut coefficients = vec![0.0; degree + 1];
        coefficients[0] = PI / duration;
        let free = (0..=degree).map(|n| !(symmetric && n % 2 == 1)).collect();
        Self {
            coefficients,
            duration,
            free,
        }
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    pub fn half(&self) -> f64 {
        self.duration / 2.0
    }

    /// Dimensionless coefficients `b_n = a_n (T/2)^{n+1}`.
    pub fn dimensionless(&self) -> Vec<f64> {
        let h = self.half();
        self.coefficients
            .iter()
            .enumerate()
            .map(|(n, a)| a * h.powi(n as i32 + 1))
            .collect()
    }

    pub fn from_dimensionless(b: &[f64], duration: f64, free: Vec<bool>) -> Self {
        let h = duration / 2.0;
        Self {
            coefficients: b.iter().enumerate().map(|(n, x)| x / h.powi(n as i32 + 1)).collect(),
            duration,
            free,
        }
    }

    /// Coefficients in rad·ns^{−(n+1)}.
    pub fn coefficients_ns(&self) -> Vec<f64> {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(n, a)| a * 1e-9f64.powi(n as i32 + 1))
            .collect()
    }

    pub fn from_ns(coefficients_ns: &[f64], duration_ns: f64) -> Self {
        Self::new(
            coefficients_ns
                .iter()
                .enumerate()
                .map(|(n, a)| a / 1e-9f64.powi(n as i32 + 1))
                .collect(),
            duration_ns * 1e-9,
        )
    }

    /// True when every odd coefficient vanishes.
    pub fn is_symmetric(&self) -> bool {
        self.coefficients.iter().skip(1).step_by(2).all(|&a| a == 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.coefficients.is_empty() {
            return Err(DcgError::Config("ansatz needs at least one coefficient".into()));
        }
        if self.free.len() != self.coefficients.len() {
            return Err(DcgError::Config("degree mask length differs from coefficient count".into()));
        }
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(DcgError::Config(format!("invalid duration {}", self.duration)));
        }
        if self.coefficients.iter().any(|a| !a.is_finite()) {
            return Err(DcgError::Numeric("non-finite ansatz coefficient".into()));
        }
        Ok(())
    }

    fn check_domain(&self, t: f64) -> Result<f64> {
        let eps = 1e-12 * self.duration;
        if !(t >= -eps && t <= self.duration + eps) {
            return Err(DcgError::Domain(format!(
                "t = {t:e} s outside [0, {:e}] s",
                self.duration
            )));
        }
        Ok(t.clamp(0.0, self.duration))
    }

    fn reduced_time(&self, t: f64) -> f64 {
        (t - self.half()) / self.half()
    }

    /// `Ω_x(t)` in rad/s; zero outside `[0, T]`.
    pub fn omega(&self, t: f64) -> f64 {
        if t < 0.0 || t > self.duration {
            return 0.0;
        }
        let v = self.reduced_time(t);
        let c = (PI * v / 2.0).cos();
        (2.0 / self.duration) * polynomial(&self.dimensionless(), v) * c * c
    }

    /// `dΩ_x/dt` in rad/s², evaluated analytically.
    pub fn omega_derivative(&self, t: f64) -> f64 {
        if t < 0.0 || t > self.duration {
            return 0.0;
        }
        let b = self.dimensionless();
        let v = self.reduced_time(t);
        let (s, c) = (PI * v / 2.0).sin_cos();
        let p = polynomial(&b, v);
        let dp: f64 = b
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, x)| n as f64 * x * v.powi(n as i32 - 1))
            .sum();
        // d/dv [p cos²] = p' cos² − p π cos sin, and dv/dt = 2/T.
        (2.0 / self.duration) * (dp * c * c - p * PI * c * s) * (2.0 / self.duration)
    }

    /// Accumulated rotation `Θ(t) = ∫_0^t Ω_x dτ` from closed-form antiderivatives.
    pub fn theta(&self, t: f64) -> Result<f64> {
        let t = self.check_domain(t)?;
        let v = self.reduced_time(t);
        Ok(self
            .dimensionless()
            .iter()
            .enumerate()
            .map(|(n, b)| b * partial_moment(n, v))
            .sum())
    }

    /// `Θ(T)`.
    pub fn total_angle(&self) -> f64 {
        self.dimensionless()
            .iter()
            .enumerate()
            .map(|(n, b)| b * moment(n))
            .sum()
    }
}

fn polynomial(b: &[f64], v: f64) -> f64 {
    b.iter().rev().fold(0.0, |acc, &x| acc * v + x)
}

/// Antiderivative of `w^n e^{iπw}`, evaluated at `w`:
/// `J_n = w^n e^{iπw}/(iπ) − n/(iπ) J_{n−1}`.
fn oscillatory_antiderivative(n: usize, w: f64) -> C64 {
    let ik = C64::new(0.0, PI);
    let e = C64::from_polar(1.0, PI * w);
    let mut j = e / ik;
    for m in 1..=n {
        j = (e * w.powi(m as i32) - j * m as f64) / ik;
    }
    j
}

/// `G_n(v) = ∫_{−1}^{v} w^n cos²(πw/2) dw`.
pub fn partial_moment(n: usize, v: f64) -> f64 {
    let f = |w: f64| w.powi(n as i32 + 1) / (2.0 * (n as f64 + 1.0)) + oscillatory_antiderivative(n, w).re / 2.0;
    f(v) - f(-1.0)
}

/// `M_n = G_n(1) = ∫_{−1}^{1} w^n cos²(πw/2) dw`; equals `∂Θ(T)/∂b_n`.
pub fn moment(n: usize) -> f64 {
    partial_moment(n, 1.0)
}

/// Samples the ansatz on the midpoint grid.
pub fn ansatz_envelope(params: &AnsatzParams, dt: f64) -> Result<Envelope> {
    params.validate()?;
    let n = grid_steps(params.duration, dt)?;
    let b = params.dimensionless();
    let h = params.half();
    let samples = (0..n)
        .map(|k| {
            let t = (k as f64 + 0.5) * dt;
            let v = (t - h) / h;
            let c = (PI * v / 2.0).cos();
            C64::new((2.0 / params.duration) * polynomial(&b, v) * c * c, 0.0)
        })
        .collect();
    Ok(Envelope::new(samples, dt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveforms::GRID_DT;
    use proptest::prelude::*;

    const T: f64 = 40e-9;

    /// Fine composite-Simpson quadrature of the ansatz, independent of the closed forms.
    fn simpson_theta(p: &AnsatzParams, t: f64) -> f64 {
        let n = 20_000;
        let h = t / n as f64;
        let mut acc = p.omega(0.0) + p.omega(t);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * p.omega(k as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn constant_term_integrates_to_half_duration() {
        let a0 = 1.234e8;
        let p = AnsatzParams::new(vec![a0], T);
        assert!((p.theta(T).unwrap() - a0 * T / 2.0).abs() < 1e-12);
        assert_eq!(p.theta(0.0).unwrap(), 0.0);
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let p = AnsatzParams::new(vec![5.1e8, 3.0e15, -8.3e24, 1.0e32, 2.0e40], T);
        for frac in [0.1, 0.37, 0.5, 0.81, 1.0] {
            let t = frac * T;
            let exact = p.theta(t).unwrap();
            let quad = simpson_theta(&p, t);
            assert!((exact - quad).abs() < 1e-10, "t={t:e}: {exact} vs {quad}");
        }
    }

    #[test]
    fn theta_rejects_out_of_range() {
        let p = AnsatzParams::new(vec![1e8], T);
        assert!(matches!(p.theta(-1e-9), Err(DcgError::Domain(_))));
        assert!(matches!(p.theta(41e-9), Err(DcgError::Domain(_))));
    }

    #[test]
    fn moments_closed_form() {
        // ∫cos² = 1, ∫w²cos²(πw/2) = 1/3 − 2/π².
        assert!((moment(0) - 1.0).abs() < 1e-15);
        assert!(moment(1).abs() < 1e-15);
        assert!((moment(2) - (1.0 / 3.0 - 2.0 / (PI * PI))).abs() < 1e-15);
    }

    #[test]
    fn envelope_peak_and_zero_cases() {
        let p = AnsatzParams::new(vec![PI / T], T);
        // T/2 falls on a grid boundary; evaluate the continuous form there.
        assert!((p.omega(T / 2.0) - PI / T).abs() < 1e-6);
        let env = ansatz_envelope(&p, GRID_DT).unwrap();
        assert!((env.peak() - PI / T).abs() / (PI / T) < 1e-5);
        let zero = ansatz_envelope(&AnsatzParams::new(vec![0.0, 0.0, 0.0], T), GRID_DT).unwrap();
        assert!(zero.samples.iter().all(|z| z.norm() == 0.0));
        assert!(matches!(
            ansatz_envelope(&AnsatzParams::new(vec![1.0], 40.001e-9), GRID_DT),
            Err(DcgError::Grid(_))
        ));
    }

    #[test]
    fn endpoints_vanish_with_zero_slope() {
        let p = AnsatzParams::new(vec![5.13e8, 0.0, -8.31e24], T);
        let peak = p.omega(T / 2.0).abs();
        let slope_scale = peak / T;
        for t in [0.0, T] {
            assert!(p.omega(t).abs() < 1e-12 * peak);
            assert!(p.omega_derivative(t).abs() < 1e-12 * slope_scale);
        }
    }

    #[test]
    fn sampled_area_matches_closed_form() {
        let p = AnsatzParams::new(vec![5.13e8, 0.0, -8.31e24], T);
        let env = ansatz_envelope(&p, GRID_DT).unwrap();
        let diff = (env.area_x() - p.total_angle()).abs();
        assert!(diff < 1e-10, "{diff:e}");
    }

    proptest! {
        #[test]
        fn symmetric_ansatz_reflection_identity(
            b0 in -5.0f64..5.0, b2 in -20.0f64..20.0, b4 in -20.0f64..20.0, frac in 0.0f64..1.0
        ) {
            let p = AnsatzParams::from_dimensionless(&[b0, 0.0, b2, 0.0, b4], T, vec![true; 5]);
            let t = frac * T;
            let total = p.theta(T).unwrap();
            let lhs = p.theta(t).unwrap() + p.theta(T - t).unwrap();
            prop_assert!((lhs - total).abs() < 1e-10);
            prop_assert!((p.omega(t) - p.omega(T - t)).abs() <= 1e-9 * p.omega(t).abs().max(1.0));
        }
    }
}
