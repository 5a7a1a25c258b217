//! Toggling-frame error analysis for a detuning error `ξσz/2`.
//!
//! For a drive `Ω_x σx/2` with accumulated angle `Θ(t)`, the error Hamiltonian in
//! the frame of the ideal evolution is `ξ(cosΘ σz/2 + sinΘ σy/2)`. Its first two
//! Magnus terms are
//! `H̄⁽¹⁾ = (1/T)(I_cos σz/2 + I_sin σy/2)` and
//! `H̄⁽²⁾ = (1/4T) σx ∫∫_{t'<t} sin(Θ(t) − Θ(t'))`, both per unit power of `ξ`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{DcgError, Result};
use crate::linalg::{sigma_x, sigma_y, sigma_z, ComplexMatrix};
use crate::waveforms::{grid_steps, AnsatzParams, Envelope, GRID_DT};

/// Rotation angle the synthesized gate must realize.
pub const TARGET_ANGLE: f64 = FRAC_PI_2;

/// Default weight of the fidelity term in the total cost.
pub const DEFAULT_WEIGHT: f64 = 0.999;

#[derive(Debug, Clone, PartialEq)]
pub struct MagnusReport {
    /// `∫cosΘ dt`, seconds.
    pub i_cos: f64,
    /// `∫sinΘ dt`, seconds.
    pub i_sin: f64,
    pub duration: f64,
    /// First-order average Hamiltonian per unit `ξ`.
    pub h1: ComplexMatrix,
    /// Second-order term per unit `ξ²`, when computed.
    pub h2: Option<ComplexMatrix>,
    /// `|ξ|T` for the detuning the report is evaluated at (zero if none given).
    pub truncation_scale: f64,
}

impl MagnusReport {
    fn from_integrals(i_cos: f64, i_sin: f64, duration: f64) -> Self {
        let h1 = (&sigma_z().scale_re(i_cos / 2.0) + &sigma_y().scale_re(i_sin / 2.0)).scale_re(1.0 / duration);
        Self {
            i_cos,
            i_sin,
            duration,
            h1,
            h2: None,
            truncation_scale: 0.0,
        }
    }

    pub fn at_detuning(mut self, detuning: f64) -> Self {
        self.truncation_scale = detuning.abs() * self.duration;
        self
    }

    pub fn cost_robust(&self) -> f64 {
        (self.i_cos.abs() + self.i_sin.abs()) / self.duration
    }
}

/// Values exported as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnusSummary {
    pub i_cos_s: f64,
    pub i_sin_s: f64,
    pub c_fidelity: f64,
    pub c_robust: f64,
    pub c_total: f64,
    pub h2_frobenius: f64,
}

/// `Θ` at the midpoints of the integration grid, from the closed-form antiderivative.
pub fn theta_profile(params: &AnsatzParams, dt: f64) -> Result<Vec<f64>> {
    let n = grid_steps(params.duration, dt)?;
    (0..n).map(|k| params.theta((k as f64 + 0.5) * dt)).collect()
}

/// `Θ` at the midpoints of an envelope's grid, from its in-phase samples.
pub fn envelope_theta_profile(env: &Envelope) -> Vec<f64> {
    let mut acc = 0.0;
    env.samples
        .iter()
        .map(|z| {
            let mid = acc + 0.5 * z.re * env.dt;
            acc += z.re * env.dt;
            mid
        })
        .collect()
}

/// Midpoint quadrature of `cosΘ` and `sinΘ`.
pub fn first_order_integrals(theta: &[f64], dt: f64) -> (f64, f64) {
    let (c, s) = theta.iter().fold((0.0, 0.0), |(c, s), &th| {
        let (st, ct) = th.sin_cos();
        (c + ct, s + st)
    });
    (c * dt, s * dt)
}

/// `∫∫_{t'<t} sin(Θ(t) − Θ(t'))` by midpoint quadrature over the triangle, using
/// running sums so the cost is linear in the number of steps.
pub fn second_order_integral(theta: &[f64], dt: f64) -> f64 {
    let (mut cos_sum, mut sin_sum, mut acc) = (0.0, 0.0, 0.0);
    for &th in theta {
        let (s, c) = th.sin_cos();
        // sin(a − b) = sin a cos b − cos a sin b, summed over earlier b.
        acc += s * cos_sum - c * sin_sum;
        cos_sum += c;
        sin_sum += s;
    }
    acc * dt * dt
}

/// `cosΘ(t) σz/2 + sinΘ(t) σy/2`, per unit `ξ`.
pub fn toggling_error_hamiltonian(params: &AnsatzParams, t: f64) -> Result<ComplexMatrix> {
    let th = params.theta(t)?;
    Ok(&sigma_z().scale_re(th.cos() / 2.0) + &sigma_y().scale_re(th.sin() / 2.0))
}

pub fn magnus_first(params: &AnsatzParams) -> Result<MagnusReport> {
    magnus_first_on(params, GRID_DT)
}

pub fn magnus_first_on(params: &AnsatzParams, dt: f64) -> Result<MagnusReport> {
    let theta = theta_profile(params, dt)?;
    let (ic, is) = first_order_integrals(&theta, dt);
    Ok(MagnusReport::from_integrals(ic, is, params.duration))
}

/// Both orders.
pub fn magnus_second(params: &AnsatzParams) -> Result<MagnusReport> {
    let theta = theta_profile(params, GRID_DT)?;
    Ok(report_from_theta(&theta, GRID_DT, params.duration))
}

/// Both orders for an arbitrary in-phase envelope (quadrature ignored).
pub fn magnus_envelope(env: &Envelope) -> MagnusReport {
    report_from_theta(&envelope_theta_profile(env), env.dt, env.duration())
}

fn report_from_theta(theta: &[f64], dt: f64, duration: f64) -> MagnusReport {
    let (ic, is) = first_order_integrals(theta, dt);
    let mut report = MagnusReport::from_integrals(ic, is, duration);
    let j = second_order_integral(theta, dt);
    report.h2 = Some(sigma_x().scale_re(j / (4.0 * duration)));
    report
}

pub fn cost_fidelity(params: &AnsatzParams) -> f64 {
    (params.total_angle() - TARGET_ANGLE).abs()
}

pub fn cost_robust(params: &AnsatzParams) -> Result<f64> {
    Ok(magnus_first(params)?.cost_robust())
}

pub fn check_weight(w: f64) -> Result<()> {
    if !(w > 0.0 && w < 1.0) {
        return Err(DcgError::Config(format!("weight {w} outside (0, 1)")));
    }
    Ok(())
}

pub fn combine_costs(c_fidelity: f64, c_robust: f64, w: f64) -> f64 {
    w * c_fidelity + (1.0 - w) * c_robust
}

pub fn cost_total(params: &AnsatzParams, w: f64) -> Result<f64> {
    check_weight(w)?;
    Ok(combine_costs(cost_fidelity(params), cost_robust(params)?, w))
}

pub fn summarize(params: &AnsatzParams, w: f64) -> Result<MagnusSummary> {
    check_weight(w)?;
    let report = magnus_second(params)?;
    let c_fidelity = cost_fidelity(params);
    let c_robust = report.cost_robust();
    Ok(MagnusSummary {
        i_cos_s: report.i_cos,
        i_sin_s: report.i_sin,
        c_fidelity,
        c_robust,
        c_total: combine_costs(c_fidelity, c_robust, w),
        h2_frobenius: report.h2.as_ref().map_or(0.0, |h| h.frobenius_norm()),
    })
}

/// First-order average of `σz/2` in the frame of the actual two-level drive
/// (both quadratures), `(1/T)∫U₀†(σz/2)U₀ dt`. Reduces to `H̄⁽¹⁾` for real drives
/// and measures how much a quadrature component shifts it.
pub fn numerical_first_order(env: &Envelope) -> ComplexMatrix {
    use crate::linalg::C64;
    use crate::quantum::step_unitary;
    let half = |z: C64| {
        let h = &sigma_x().scale_re(z.re / 2.0) + &sigma_y().scale_re(z.im / 2.0);
        step_unitary(&h, env.dt / 2.0)
    };
    let sz = sigma_z().scale_re(0.5);
    let mut u = ComplexMatrix::identity(2);
    let mut acc = ComplexMatrix::zeros(2);
    for z in &env.samples {
        let h = half(*z);
        let mid = &h * &u;
        acc = &acc + &(&(&mid.dagger() * &sz) * &mid);
        u = &h * &mid;
    }
    acc.scale_re(env.dt / env.duration())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::phase_insensitive_distance;
    use crate::model::QubitModel;
    use crate::quantum::propagate_envelope;
    use crate::waveforms::{ansatz_envelope, drag_augment};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    const T: f64 = 40e-9;

    fn optimal_like() -> AnsatzParams {
        AnsatzParams::from_ns(&[0.5131563972, 0.0, -0.0083138222], 40.0)
    }

    #[test]
    fn toggling_frame_boundaries_and_spectrum() {
        let p = optimal_like();
        let h0 = toggling_error_hamiltonian(&p, 0.0).unwrap();
        assert!((&h0 - &sigma_z().scale_re(0.5)).max_abs() < 1e-15);
        assert!(toggling_error_hamiltonian(&p, 2.0 * T).is_err());
        for k in 0..=40 {
            let h = toggling_error_hamiltonian(&p, k as f64 * T / 40.0).unwrap();
            // Traceless 2×2 Hermitian with det = −1/4 has eigenvalues ±1/2.
            let det = h[(0, 0)] * h[(1, 1)] - h[(0, 1)] * h[(1, 0)];
            assert!((det.re + 0.25).abs() < 1e-14 && det.im.abs() < 1e-14);
            assert!(h.trace().norm() < 1e-15);
        }
    }

    #[test]
    fn quarter_turn_is_sigma_y() {
        let p = AnsatzParams::new(vec![PI / T], T);
        let h = toggling_error_hamiltonian(&p, T).unwrap();
        assert!((&h - &sigma_y().scale_re(0.5)).max_abs() < 1e-15);
    }

    #[test]
    fn zero_envelope_first_and_second_order() {
        let p = AnsatzParams::new(vec![0.0, 0.0, 0.0], T);
        let r = magnus_second(&p).unwrap();
        assert!((r.i_cos - T).abs() < 1e-20);
        assert_eq!(r.i_sin, 0.0);
        assert!((&r.h1 - &sigma_z().scale_re(0.5)).max_abs() < 1e-12);
        assert!(r.h2.unwrap().max_abs() == 0.0);
        assert!((cost_robust(&p).unwrap() - 1.0).abs() < 1e-12);
        assert!((cost_fidelity(&p) - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn square_pi_pulse_integrals() {
        let n = 2560;
        let dt = T / n as f64;
        let theta: Vec<f64> = (0..n).map(|k| PI * (k as f64 + 0.5) / n as f64).collect();
        let (ic, is) = first_order_integrals(&theta, dt);
        assert!(ic.abs() < 1e-20);
        assert!((is - 2.0 * T / PI).abs() < 1e-6 * T);
        let r = (ic.abs() + is.abs()) / T;
        assert!((r - 2.0 / PI).abs() < 1e-6);
        // Double integral: T²/π, so H2 = T/(4π) σx.
        let j = second_order_integral(&theta, dt);
        assert!((j - T * T / PI).abs() < 1e-5 * T * T);
    }

    /// Brute-force O(N²) midpoint sum over t' < t.
    fn brute_second(theta: &[f64], dt: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..theta.len() {
            for j in 0..i {
                acc += (theta[i] - theta[j]).sin();
            }
        }
        acc * dt * dt
    }

    #[test]
    fn second_order_matches_brute_force_and_converges() {
        let p = optimal_like();
        let coarse = |steps_per_ns: f64| {
            let dt = 1e-9 / steps_per_ns;
            let th = theta_profile(&p, dt).unwrap();
            (second_order_integral(&th, dt), brute_second(&th, dt))
        };
        let (a8, b8) = coarse(8.0);
        assert!((a8 - b8).abs() < 1e-12 * T * T);
        let (a16, _) = coarse(16.0);
        let (a32, _) = coarse(32.0);
        // Second-order quadrature: successive differences shrink about fourfold.
        let ratio = (a8 - a16) / (a16 - a32);
        assert!((3.0..5.0).contains(&ratio), "{ratio}");
        let r = magnus_second(&p).unwrap();
        let h2 = r.h2.unwrap();
        assert!(h2.hermiticity_defect() < 1e-12 * h2.max_abs().max(1e-30));
        assert!(h2.trace().norm() < 1e-20);
    }

    #[test]
    fn grid_refinement_stability() {
        for p in [optimal_like(), AnsatzParams::from_ns(&[0.3, 0.0, -0.001], 40.0)] {
            let a = magnus_first_on(&p, GRID_DT).unwrap();
            let b = magnus_first_on(&p, GRID_DT / 2.0).unwrap();
            // Relative to the natural scale T of the integrals.
            assert!((a.i_cos - b.i_cos).abs() < 1e-8 * T, "{:e}", a.i_cos - b.i_cos);
            assert!((a.i_sin - b.i_sin).abs() < 1e-8 * T, "{:e}", a.i_sin - b.i_sin);
        }
    }

    #[test]
    fn cost_arithmetic() {
        assert!((combine_costs(0.2, 0.4, 0.5) - 0.3).abs() < 1e-15);
        assert_eq!(combine_costs(0.0, 0.0, 0.999), 0.0);
        let p = AnsatzParams::new(vec![PI / T], T);
        assert!(cost_fidelity(&AnsatzParams::new(vec![PI / T], T)) < 1e-15);
        assert!(matches!(cost_total(&p, 1.0), Err(DcgError::Config(_))));
        assert!(matches!(cost_total(&p, 0.0), Err(DcgError::Config(_))));
    }

    #[test]
    fn first_order_predicts_toggling_propagator() {
        let p = AnsatzParams::from_ns(&[0.4, 0.0, -0.002], 40.0);
        let env = ansatz_envelope(&p, GRID_DT).unwrap();
        let r = magnus_first(&p).unwrap();
        let q = QubitModel::ideal_qubit();
        let u0 = propagate_envelope(&env, &q).unwrap();
        let mut worst: f64 = 0.0;
        for xt in [1e-3, 3e-3, 1e-2, 3e-2, 1e-1] {
            let xi = xt / T;
            let u = propagate_envelope(&env, &q.with_detuning(xi)).unwrap();
            let ui = &u0.dagger() * &u;
            let approx = ComplexMatrix::expm_hermitian(&r.h1, xi * T);
            worst = worst.max(phase_insensitive_distance(&ui, &approx) / (xt * xt));
        }
        assert!(worst < 1.0, "{worst}");
    }

    #[test]
    fn quadrature_free_numerical_average_matches() {
        let p = optimal_like();
        let env = ansatz_envelope(&p, GRID_DT).unwrap();
        let num = numerical_first_order(&env);
        let r = magnus_first(&p).unwrap();
        assert!((&num - &r.h1).max_abs() < 1e-6);
        // A DRAG quadrature perturbs the average only slightly.
        let d = numerical_first_order(&drag_augment(&env, 0.2e-9).unwrap());
        assert!((&d - &num).max_abs() < 0.05);
    }

    proptest! {
        #[test]
        fn symmetric_duality(b2 in -3.0f64..3.0, b4 in -3.0f64..3.0) {
            // Rescale b0 so Θ(T) = π/2.
            let m = crate::waveforms::moment;
            let b0 = (TARGET_ANGLE - b2 * m(2) - b4 * m(4)) / m(0);
            let p = AnsatzParams::from_dimensionless(&[b0, 0.0, b2, 0.0, b4], T, vec![true; 5]);
            let r = magnus_first(&p).unwrap();
            prop_assert!((r.i_cos - r.i_sin).abs() < 1e-9 * T);
        }
    }
}
