//! Gate channels and the fidelity and leakage metrics evaluated on them.

use crate::error::{DcgError, Result};
use crate::linalg::{ComplexMatrix, C64, ONE, ZERO};

/// Dimension of the computational subspace.
pub const COMPUTATIONAL_DIM: usize = 2;

/// A unitary, or a process in column-stacking superoperator form
/// (`vec(E(ρ)) = S · vec(ρ)` with `vec` stacking columns).
#[derive(Debug, Clone, PartialEq)]
pub enum GateChannel {
    Unitary(ComplexMatrix),
    Process { superop: ComplexMatrix, dim: usize },
}

pub fn vectorize(rho: &ComplexMatrix) -> Vec<C64> {
    let d = rho.dim();
    let mut v = Vec::with_capacity(d * d);
    for c in 0..d {
        for r in 0..d {
            v.push(rho[(r, c)]);
        }
    }
    v
}

pub fn unvectorize(v: &[C64], d: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d);
    for c in 0..d {
        for r in 0..d {
            m[(r, c)] = v[c * d + r];
        }
    }
    m
}

/// Superoperator of `ρ ↦ UρU†`: `conj(U) ⊗ U`.
pub fn unitary_superoperator(u: &ComplexMatrix) -> ComplexMatrix {
    u.conj().kron(u)
}

impl GateChannel {
    pub fn total_dim(&self) -> usize {
        match self {
            GateChannel::Unitary(u) => u.dim(),
            GateChannel::Process { dim, .. } => *dim,
        }
    }

    pub fn computational_dim(&self) -> usize {
        COMPUTATIONAL_DIM
    }

    pub fn as_unitary(&self) -> Option<&ComplexMatrix> {
        match self {
            GateChannel::Unitary(u) => Some(u),
            GateChannel::Process { .. } => None,
        }
    }

    pub fn superoperator(&self) -> ComplexMatrix {
        match self {
            GateChannel::Unitary(u) => unitary_superoperator(u),
            GateChannel::Process { superop, .. } => superop.clone(),
        }
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        match self {
            GateChannel::Unitary(u) => &(u * rho) * &u.dagger(),
            GateChannel::Process { superop, dim } => unvectorize(&superop.mul_vec(&vectorize(rho)), *dim),
        }
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &GateChannel) -> GateChannel {
        match (self, next) {
            (GateChannel::Unitary(a), GateChannel::Unitary(b)) => GateChannel::Unitary(b * a),
            _ => GateChannel::Process {
                superop: &next.superoperator() * &self.superoperator(),
                dim: self.total_dim(),
            },
        }
    }

    /// Qubit depolarizing channel `ρ ↦ (1 − p)ρ + p·I/2`.
    pub fn depolarizing(p: f64) -> GateChannel {
        let id = ComplexMatrix::identity(2);
        let mut superop = unitary_superoperator(&id).scale_re(1.0 - p);
        // vec(Tr(ρ) I/2) = |vec I⟩⟨vec I| vec(ρ) / 2
        let vi = vectorize(&id);
        for r in 0..4 {
            for c in 0..4 {
                superop[(r, c)] += vi[r] * vi[c].conj() * (p / 2.0);
            }
        }
        GateChannel::Process { superop, dim: 2 }
    }

    /// Largest deviation of `Tr E(ρ)` from `Tr ρ` over the matrix units `|i⟩⟨j|`.
    pub fn trace_defect(&self) -> f64 {
        let d = self.total_dim();
        let s = self.superoperator();
        let mut worst: f64 = 0.0;
        for col in 0..d * d {
            let (r, c) = (col % d, col / d);
            let tr: C64 = (0..d).map(|k| s[(k * d + k, col)]).sum();
            let expected = if r == c { ONE } else { ZERO };
            worst = worst.max((tr - expected).norm());
        }
        worst
    }
}

/// Density matrix of a computational state embedded in `dim` levels.
pub fn embed_state(state: &[C64], dim: usize) -> Result<ComplexMatrix> {
    if state.len() != COMPUTATIONAL_DIM || dim < COMPUTATIONAL_DIM {
        return Err(DcgError::Contract("state must be a qubit state".into()));
    }
    let norm: f64 = state.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(DcgError::Contract("zero state vector".into()));
    }
    let mut rho = ComplexMatrix::zeros(dim);
    for r in 0..2 {
        for c in 0..2 {
            rho[(r, c)] = state[r] * state[c].conj() / (norm * norm);
        }
    }
    Ok(rho)
}

/// The six Pauli eigenstates, a state 2-design on the qubit.
pub fn pauli_eigenstates() -> [[C64; 2]; 6] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let r = |x: f64| C64::new(x, 0.0);
    [
        [ONE, ZERO],
        [ZERO, ONE],
        [r(h), r(h)],
        [r(h), r(-h)],
        [r(h), C64::new(0.0, h)],
        [r(h), C64::new(0.0, -h)],
    ]
}

fn check_target(target: &ComplexMatrix) -> Result<()> {
    if target.dim() != COMPUTATIONAL_DIM || target.unitarity_defect() > 1e-9 {
        return Err(DcgError::Contract("target must be a 2×2 unitary".into()));
    }
    Ok(())
}

/// `1 − F_avg` on the computational subspace.
///
/// For unitaries this is `λ/2 + ‖W₀‖²/3`, where `W = V†M`, `M` the computational
/// block, `W₀` its traceless part and `λ` the population leaving the subspace.
/// The form avoids cancellation, so it stays accurate for tiny errors.
pub fn average_gate_infidelity(channel: &GateChannel, target: &ComplexMatrix) -> Result<f64> {
    check_target(target)?;
    if channel.total_dim() < COMPUTATIONAL_DIM {
        return Err(DcgError::Contract("channel smaller than a qubit".into()));
    }
    match channel {
        GateChannel::Unitary(u) => {
            let d = u.dim();
            let m = u.block(COMPUTATIONAL_DIM);
            let w = &target.dagger() * &m;
            let half = w.trace() / 2.0;
            let w0 = &w - &ComplexMatrix::identity(2).scale(half);
            let leaked: f64 = (0..COMPUTATIONAL_DIM)
                .flat_map(|c| (COMPUTATIONAL_DIM..d).map(move |r| (r, c)))
                .map(|(r, c)| u[(r, c)].norm_sqr())
                .sum();
            Ok(leaked / 2.0 + w0.frobenius_norm().powi(2) / 3.0)
        }
        GateChannel::Process { dim, .. } => {
            let mut acc = 0.0;
            for psi in pauli_eigenstates() {
                let out = channel.apply(&embed_state(&psi, *dim)?);
                let ideal = target.mul_vec(&psi);
                let mut f = ZERO;
                for r in 0..2 {
                    for c in 0..2 {
                        f += ideal[r].conj() * out[(r, c)] * ideal[c];
                    }
                }
                acc += 1.0 - f.re;
            }
            Ok(acc / 6.0)
        }
    }
}

pub fn average_gate_fidelity(channel: &GateChannel, target: &ComplexMatrix) -> Result<f64> {
    Ok(1.0 - average_gate_infidelity(channel, target)?)
}

/// Population outside the computational subspace after the channel acts on `state`.
pub fn leakage_population(channel: &GateChannel, state: &[C64]) -> Result<f64> {
    let d = channel.total_dim();
    if d <= COMPUTATIONAL_DIM {
        return Err(DcgError::NoLeakageSpace(d));
    }
    let out = channel.apply(&embed_state(state, d)?);
    Ok((COMPUTATIONAL_DIM..d).map(|k| out[(k, k)].re).sum())
}

/// Leakage averaged over computational inputs (the maximally mixed qubit state).
pub fn average_leakage(channel: &GateChannel) -> Result<f64> {
    let a = leakage_population(channel, &[ONE, ZERO])?;
    let b = leakage_population(channel, &[ZERO, ONE])?;
    Ok((a + b) / 2.0)
}
