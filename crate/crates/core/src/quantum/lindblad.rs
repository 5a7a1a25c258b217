//! Markovian open-system evolution on the same midpoint grid as the unitary stepper.

use super::channel::GateChannel;
use super::propagate::{drive_hamiltonian, propagate_linear};
use crate::small;
use crate::error::{DcgError, Result};
use crate::linalg::{lowering, number_operator, ComplexMatrix, C64};
use crate::model::QubitModel;
use crate::waveforms::Envelope;

/// Jump operators: `√Γ↓ a`, `√Γ↑ a†` and `√(2γφ) n̂`.
pub fn collapse_operators(model: &QubitModel) -> Result<Vec<ComplexMatrix>> {
    model.validate()?;
    let (down, up) = model.jump_rates();
    let dephasing = model.pure_dephasing_rate();
    if down < 0.0 || up < 0.0 || dephasing < 0.0 {
        return Err(DcgError::InvalidModel("negative decoherence rate".into()));
    }
    let a = lowering(model.levels);
    let mut ops = Vec::new();
    if down > 0.0 {
        ops.push(a.scale_re(down.sqrt()));
    }
    if up > 0.0 {
        ops.push(a.dagger().scale_re(up.sqrt()));
    }
    if dephasing > 0.0 {
        ops.push(number_operator(model.levels).scale_re((2.0 * dephasing).sqrt()));
    }
    Ok(ops)
}

/// Column-stacking generator
/// `−i(I⊗H − Hᵀ⊗I) + Σ (c̄⊗c − ½ I⊗c†c − ½ (c†c)ᵀ⊗I)`.
pub fn lindbladian(h: &ComplexMatrix, collapse: &[ComplexMatrix]) -> ComplexMatrix {
    let d = h.dim();
    let id = ComplexMatrix::identity(d);
    let mut l = (&id.kron(h) - &h.transpose().kron(&id)).scale(C64::new(0.0, -1.0));
    for c in collapse {
        let cdc = &c.dagger() * c;
        l = &l + &c.conj().kron(c);
        l = &l - &id.kron(&cdc).scale_re(0.5);
        l = &l - &cdc.transpose().kron(&id).scale_re(0.5);
    }
    l
}

/// Process realized by the envelope under the model's Hamiltonian and dissipation.
pub fn lindblad_propagate(env: &Envelope, model: &QubitModel) -> Result<GateChannel> {
    let collapse = collapse_operators(model)?;
    let d = model.levels;
    let base = lindbladian(&drive_hamiltonian(C64::new(0.0, 0.0), model)?, &collapse);
    // The drive enters the generator linearly; split it into its two quadratures.
    let zero = model.with_detuning(0.0).with_anharmonicity(0.0);
    let lx = lindbladian(&drive_hamiltonian(C64::new(1.0, 0.0), &zero)?, &[]);
    let ly = lindbladian(&drive_hamiltonian(C64::new(0.0, 1.0), &zero)?, &[]);
    let superop = match d {
        2 => small::to_matrix(&propagate_linear::<4>(
            &small::from_matrix(&base),
            &small::from_matrix(&lx),
            &small::from_matrix(&ly),
            env,
        )?),
        _ => small::to_matrix(&propagate_linear::<9>(
            &small::from_matrix(&base),
            &small::from_matrix(&lx),
            &small::from_matrix(&ly),
            env,
        )?),
    };
    if !superop.is_finite() {
        return Err(DcgError::Numeric("process has non-finite entries".into()));
    }
    Ok(GateChannel::Process { superop, dim: d })
}

/// Process for an undriven interval of the given length (whole grid steps not required).
pub fn idle_channel(duration: f64, model: &QubitModel) -> Result<GateChannel> {
    let collapse = collapse_operators(model)?;
    let h = drive_hamiltonian(C64::new(0.0, 0.0), model)?;
    let s = lindbladian(&h, &collapse).scale_re(duration).expm();
    Ok(GateChannel::Process {
        superop: s,
        dim: model.levels,
    })
}
