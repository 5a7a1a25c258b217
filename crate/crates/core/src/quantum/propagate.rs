//! Time-ordered propagation with midpoint-sampled piecewise-constant exponentials.

use serde::{Deserialize, Serialize};

use crate::error::{DcgError, Result};
use crate::linalg::{sigma_x, sigma_z, ComplexMatrix, C64};
use crate::model::{PairModel, QubitModel};
use crate::small::{self, Small};
use crate::waveforms::{grid_steps, Envelope};

/// `exp(−i H dt)` for a Hermitian `H`, closed form in dimension 2.
pub fn step_unitary(h: &ComplexMatrix, dt: f64) -> ComplexMatrix {
    if h.dim() != 2 {
        return ComplexMatrix::expm_hermitian(h, dt);
    }
    let c = 0.5 * (h[(0, 0)].re + h[(1, 1)].re);
    let nz = 0.5 * (h[(0, 0)].re - h[(1, 1)].re);
    let nx = h[(1, 0)].re;
    let ny = h[(1, 0)].im;
    let r = (nx * nx + ny * ny + nz * nz).sqrt();
    let (s, co) = (r * dt).sin_cos();
    // sin(r dt)/r, stable at r → 0
    let sr = if r * dt < 1e-8 { dt * (1.0 - (r * dt).powi(2) / 6.0) } else { s / r };
    let phase = C64::from_polar(1.0, -c * dt);
    let mi = C64::new(0.0, -sr);
    ComplexMatrix::from_rows(
        2,
        vec![
            phase * (C64::new(co, 0.0) + mi * nz),
            phase * mi * C64::new(nx, -ny),
            phase * mi * C64::new(nx, ny),
            phase * (C64::new(co, 0.0) - mi * nz),
        ],
    )
}

/// `𝒯exp(−i∫H dt)` from `H` sampled at the step midpoints.
pub fn propagate_piecewise(
    hamiltonian_at: impl Fn(f64) -> ComplexMatrix,
    duration: f64,
    dt: f64,
) -> Result<ComplexMatrix> {
    let n = grid_steps(duration, dt)?;
    let mut u: Option<ComplexMatrix> = None;
    for k in 0..n {
        let h = hamiltonian_at((k as f64 + 0.5) * dt);
        if !h.is_finite() {
            return Err(DcgError::Numeric(format!("non-finite Hamiltonian at step {k}")));
        }
        let step = step_unitary(&h, dt);
        u = Some(match u {
            None => step,
            Some(prev) => &step * &prev,
        });
    }
    let u = u.expect("grid has at least one step");
    if !u.is_finite() {
        return Err(DcgError::Numeric("propagator has non-finite entries".into()));
    }
    Ok(u)
}

/// Diagonal of the undriven Hamiltonian. On the qubit block it is exactly `ξσz/2`;
/// the second excited level sits at `−3ξ/2 + α`.
pub fn bare_energies(model: &QubitModel) -> Vec<f64> {
    (0..model.levels)
        .map(|n| {
            let n = n as f64;
            0.5 * model.detuning * (1.0 - 2.0 * n) + model.anharmonicity * n * (n - 1.0) / 2.0
        })
        .collect()
}

/// Rotating-frame Hamiltonian for one drive sample:
/// `Re(Ω)(a + a†)/2 + Im(Ω) i(a† − a)/2` plus the bare energies.
pub fn drive_hamiltonian(sample: C64, model: &QubitModel) -> Result<ComplexMatrix> {
    if !(2..=3).contains(&model.levels) {
        return Err(DcgError::UnsupportedModel(format!("{} levels", model.levels)));
    }
    Ok(drive_hamiltonian_unchecked(sample, model.levels, &bare_energies(model)))
}

fn drive_hamiltonian_unchecked(sample: C64, levels: usize, energies: &[f64]) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(levels);
    for (n, e) in energies.iter().enumerate() {
        h[(n, n)] = C64::new(*e, 0.0);
    }
    for n in 1..levels {
        let w = (n as f64).sqrt() * 0.5;
        h[(n - 1, n)] = sample.conj() * w;
        h[(n, n - 1)] = sample * w;
    }
    h
}

/// Product of `exp((G₀ + x·Gx + y·Gy)·dt)` over samples `x + iy`, later samples on the left.
pub(crate) fn propagate_linear<const N: usize>(
    base: &Small<N>,
    gx: &Small<N>,
    gy: &Small<N>,
    env: &Envelope,
) -> Result<Small<N>> {
    let mut u = small::identity::<N>();
    let dt = env.dt;
    for (k, z) in env.samples.iter().enumerate() {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(DcgError::Numeric(format!("non-finite drive sample {k}")));
        }
        let mut a = *base;
        for i in 0..N {
            for j in 0..N {
                a[i][j] = (a[i][j] + gx[i][j] * z.re + gy[i][j] * z.im) * dt;
            }
        }
        u = small::mul(&small::expm(&a), &u);
    }
    Ok(u)
}

/// Generator pieces `−iH₀`, `−i∂H/∂Ω_x`, `−i∂H/∂Ω_y` for the model.
fn generator_parts(model: &QubitModel) -> (ComplexMatrix, ComplexMatrix, ComplexMatrix) {
    let e = bare_energies(model);
    let levels = model.levels;
    let mi = C64::new(0.0, -1.0);
    let h0 = drive_hamiltonian_unchecked(C64::new(0.0, 0.0), levels, &e);
    let zero = vec![0.0; levels];
    let hx = drive_hamiltonian_unchecked(C64::new(1.0, 0.0), levels, &zero);
    let hy = drive_hamiltonian_unchecked(C64::new(0.0, 1.0), levels, &zero);
    (h0.scale(mi), hx.scale(mi), hy.scale(mi))
}

/// Propagator of an envelope on a single qubit or transmon.
pub fn propagate_envelope(env: &Envelope, model: &QubitModel) -> Result<ComplexMatrix> {
    model.validate()?;
    let (g0, gx, gy) = generator_parts(model);
    match model.levels {
        2 => Ok(small::to_matrix(&propagate_linear::<2>(
            &small::from_matrix(&g0),
            &small::from_matrix(&gx),
            &small::from_matrix(&gy),
            env,
        )?)),
        _ => Ok(small::to_matrix(&propagate_linear::<3>(
            &small::from_matrix(&g0),
            &small::from_matrix(&gx),
            &small::from_matrix(&gy),
            env,
        )?)),
    }
}

/// Where an ideal spectator `X_π` is applied relative to the target pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectatorFlip {
    pub time: f64,
}

/// Target `σz`-like operator `I − 2n̂` on the target's levels.
fn target_z(levels: usize) -> ComplexMatrix {
    let d: Vec<C64> = (0..levels).map(|n| C64::new(1.0 - 2.0 * n as f64, 0.0)).collect();
    ComplexMatrix::diagonal(&d)
}

/// Pair Hamiltonian on target ⊗ spectator (spectator truncated to two levels, undriven).
pub fn pair_hamiltonian(sample: C64, pair: &PairModel) -> Result<ComplexMatrix> {
    let ht = drive_hamiltonian(sample, &pair.target)?;
    let eye = ComplexMatrix::identity(2);
    let zz = target_z(pair.target.levels).kron(&sigma_z());
    Ok(&ht.kron(&eye) + &zz.scale_re(0.5 * pair.zz_strength))
}

/// Propagator of the pair for one target pulse with the ZZ term always on.
/// Spectator flips are only allowed at the pulse boundaries.
pub fn propagate_pair(env: &Envelope, pair: &PairModel, flips: &[SpectatorFlip]) -> Result<ComplexMatrix> {
    pair.validate()?;
    let duration = env.duration();
    let tol = 1e-12 * duration.max(env.dt);
    let flip = ComplexMatrix::identity(pair.target.levels).kron(&sigma_x());
    let (mut before, mut after) = (0usize, 0usize);
    for f in flips {
        if f.time.abs() <= tol {
            before += 1;
        } else if (f.time - duration).abs() <= tol {
            after += 1;
        } else {
            return Err(DcgError::Sequencing(format!(
                "spectator flip at {:e} s falls inside the pulse window [0, {duration:e}] s",
                f.time
            )));
        }
    }
    let dim = pair.target.levels * 2;
    let mut u = ComplexMatrix::identity(dim);
    for _ in 0..before {
        u = &flip * &u;
    }
    for z in &env.samples {
        let h = pair_hamiltonian(*z, pair)?;
        u = &step_unitary(&h, env.dt) * &u;
    }
    for _ in 0..after {
        u = &flip * &u;
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{phase_insensitive_distance, rx, ZERO};
    use crate::model::{mhz_to_rad_per_s, presets};
    use crate::waveforms::{gaussian_envelope, GRID_DT};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    const T: f64 = 40e-9;

    #[test]
    fn zero_hamiltonian_gives_identity() {
        let u = propagate_piecewise(|_| ComplexMatrix::zeros(2), T, GRID_DT).unwrap();
        assert!((&u - &ComplexMatrix::identity(2)).max_abs() < 1e-15);
    }

    #[test]
    fn constant_detuning_is_diagonal_phase() {
        let xi = mhz_to_rad_per_s(3.0);
        let u = propagate_piecewise(|_| sigma_z().scale_re(xi / 2.0), T, GRID_DT).unwrap();
        assert!((u[(0, 0)] - C64::from_polar(1.0, -xi * T / 2.0)).norm() < 1e-12);
        assert!((u[(1, 1)] - C64::from_polar(1.0, xi * T / 2.0)).norm() < 1e-12);
        assert!(u[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn square_half_pi_rotation() {
        let omega = PI / 2.0 / T;
        let u = propagate_piecewise(|_| sigma_x().scale_re(omega / 2.0), T, GRID_DT).unwrap();
        assert!((u[(0, 0)].norm_sqr() - 0.5).abs() < 1e-12);
        assert!(phase_insensitive_distance(&u, &rx(PI / 2.0)) < 1e-12);
    }

    #[test]
    fn non_commensurate_grid_rejected() {
        let r = propagate_piecewise(|_| ComplexMatrix::zeros(2), 1.00001e-9, GRID_DT);
        assert!(matches!(r, Err(DcgError::Grid(_))));
    }

    #[test]
    fn non_finite_hamiltonian_rejected() {
        let r = propagate_piecewise(|_| sigma_x().scale_re(f64::NAN), T, GRID_DT);
        assert!(matches!(r, Err(DcgError::Numeric(_))));
    }

    #[test]
    fn hamiltonian_elements() {
        let q = QubitModel::ideal_qubit();
        let h = drive_hamiltonian(C64::new(2.0, 0.0), &q).unwrap();
        assert!((&h - &sigma_x()).max_abs() < 1e-15);
        let xi = 5.0;
        let h = drive_hamiltonian(ZERO, &q.with_detuning(xi)).unwrap();
        assert!((&h - &sigma_z().scale_re(xi / 2.0)).max_abs() < 1e-15);
        let q0 = presets::q0().with_detuning(0.0);
        let h = drive_hamiltonian(C64::new(3.0, 0.0), &q0).unwrap();
        assert!((h[(1, 2)].re - 3.0 * 2f64.sqrt() / 2.0).abs() < 1e-12);
        assert!((h[(2, 2)].re - q0.anharmonicity).abs() < 1e-6);
        assert!(matches!(
            drive_hamiltonian(ZERO, &q.with_levels(4)),
            Err(DcgError::UnsupportedModel(_))
        ));
    }

    #[test]
    fn quadrature_drive_is_sigma_y() {
        let h = drive_hamiltonian(C64::new(0.0, 2.0), &QubitModel::ideal_qubit()).unwrap();
        assert!((&h - &crate::linalg::sigma_y()).max_abs() < 1e-15);
    }

    #[test]
    fn closed_form_step_matches_series() {
        let h = ComplexMatrix::from_rows(
            2,
            vec![C64::new(1.3e8, 0.0), C64::new(2.0e8, -0.7e8), C64::new(2.0e8, 0.7e8), C64::new(-0.4e8, 0.0)],
        );
        let a = step_unitary(&h, 3e-9);
        let b = ComplexMatrix::expm_hermitian(&h, 3e-9);
        assert!((&a - &b).max_abs() < 1e-13);
    }

    #[test]
    fn large_anharmonicity_suppresses_leakage() {
        let env = crate::waveforms::Envelope::from_fn(T, GRID_DT, |_| C64::new(PI / 2.0 / T, 0.0)).unwrap();
        let mut last = f64::INFINITY;
        for mhz in [-200.0, -2000.0, -20000.0] {
            let u = propagate_envelope(&env, &QubitModel::ideal_transmon(mhz_to_rad_per_s(mhz))).unwrap();
            let leak = u[(2, 0)].norm_sqr() + u[(2, 1)].norm_sqr();
            assert!(leak < last);
            last = leak;
        }
        assert!(last < 1e-6);
    }

    #[test]
    fn composition_over_halves() {
        let env = gaussian_envelope(T, T / 8.0, GRID_DT, PI / 2.0).unwrap();
        let q = presets::q0().with_detuning(mhz_to_rad_per_s(1.5));
        let full = propagate_envelope(&env, &q).unwrap();
        let n = env.len() / 2;
        let first = Envelope::new(env.samples[..n].to_vec(), GRID_DT);
        let second = Envelope::new(env.samples[n..].to_vec(), GRID_DT);
        let joined = &propagate_envelope(&second, &q).unwrap() * &propagate_envelope(&first, &q).unwrap();
        assert!((&full - &joined).max_abs() < 1e-10);
    }

    #[test]
    fn second_order_convergence() {
        let q = presets::q0().with_detuning(mhz_to_rad_per_s(2.0));
        let shape = |t: f64| {
            let s = (PI * t / T).sin();
            C64::new(PI / T * s * s, 0.3e8 * (2.0 * PI * t / T).sin())
        };
        let at = |dt: f64| {
            let env = Envelope::from_fn(T, dt, shape).unwrap();
            propagate_envelope(&env, &q).unwrap()
        };
        let dt = 1e-9 / 16.0;
        let reference = at(dt / 8.0);
        let e1 = (&at(dt) - &reference).max_abs();
        let e2 = (&at(dt / 2.0) - &reference).max_abs();
        // Richardson: errors against a dt/8 reference shrink as (1 − 1/64)/(1/4 − 1/64).
        let ratio = e1 / e2;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn pair_decoupled_without_zz() {
        let env = gaussian_envelope(T, T / 8.0, GRID_DT, PI / 2.0).unwrap();
        let mut pair = presets::q0q1();
        pair.target = pair.target.with_levels(2);
        pair.zz_strength = 0.0;
        let u = propagate_pair(&env, &pair, &[]).unwrap();
        let single = propagate_envelope(&env, &pair.target).unwrap();
        assert!((&u - &single.kron(&ComplexMatrix::identity(2))).max_abs() < 1e-12);
    }

    #[test]
    fn pair_block_equivalence() {
        let env = gaussian_envelope(T, T / 8.0, GRID_DT, PI / 2.0).unwrap();
        for levels in [2, 3] {
            let mut pair = presets::q0q1();
            pair.target = pair.target.with_levels(levels);
            let u = propagate_pair(&env, &pair, &[]).unwrap();
            for s in 0..2 {
                let single = propagate_envelope(&env, &pair.target.with_detuning(pair.branch_detuning(s))).unwrap();
                for r in 0..levels {
                    for c in 0..levels {
                        assert!((u[(2 * r + s, 2 * c + s)] - single[(r, c)]).norm() < 1e-10);
                        assert!(u[(2 * r + s, 2 * c + 1 - s)].norm() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn idle_pair_branch_phase() {
        let pair = {
            let mut p = presets::q0q1();
            p.target = p.target.with_levels(2);
            p
        };
        let env = Envelope::zeros(2560, GRID_DT);
        let u = propagate_pair(&env, &pair, &[]).unwrap();
        // Spectator in |1⟩: target evolves as exp(+iξ_ZZ T σz/2).
        let x = pair.zz_strength * T / 2.0;
        assert!((u[(1, 1)] - C64::from_polar(1.0, x)).norm() < 1e-12);
        assert!((u[(3, 3)] - C64::from_polar(1.0, -x)).norm() < 1e-12);
    }

    #[test]
    fn flips_only_at_boundaries() {
        let env = Envelope::zeros(64, GRID_DT);
        let pair = presets::q0q1();
        assert!(propagate_pair(&env, &pair, &[SpectatorFlip { time: 0.0 }]).is_ok());
        assert!(propagate_pair(&env, &pair, &[SpectatorFlip { time: 1e-9 }]).is_ok());
        assert!(matches!(
            propagate_pair(&env, &pair, &[SpectatorFlip { time: 0.5e-9 }]),
            Err(DcgError::Sequencing(_))
        ));
        let u = propagate_pair(&env, &pair, &[SpectatorFlip { time: 0.0 }]).unwrap();
        assert!(u[(1, 0)].norm() > 0.99);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn random_envelopes_stay_unitary(
            amps in proptest::collection::vec((-3e8f64..3e8, -3e8f64..3e8), 8),
            detuning_mhz in -10.0f64..10.0,
            levels in 2usize..=3,
        ) {
            // Random smooth-ish drive: piecewise-linear interpolation of 8 knots over 20 ns.
            let dur = 20e-9;
            let env = Envelope::from_fn(dur, GRID_DT, |t| {
                let x = t / dur * 7.0;
                let i = (x.floor() as usize).min(6);
                let f = x - i as f64;
                let (a, b) = (amps[i], amps[i + 1]);
                C64::new(a.0 * (1.0 - f) + b.0 * f, a.1 * (1.0 - f) + b.1 * f)
            }).unwrap();
            let model = presets::q0().with_levels(levels).with_detuning(mhz_to_rad_per_s(detuning_mhz));
            let u = propagate_envelope(&env, &model).unwrap();
            prop_assert!(u.unitarity_defect() < 1e-10);
        }
    }
}
