//! Propagation, open-system evolution and gate metrics.

pub mod channel;
pub mod lindblad;
pub mod propagate;

pub use channel::{
    average_gate_fidelity, average_gate_infidelity, average_leakage, embed_state, leakage_population,
    unitary_superoperator, unvectorize, vectorize, GateChannel, COMPUTATIONAL_DIM,
};
pub use lindblad::{collapse_operators, idle_channel, lindblad_propagate, lindbladian};
pub use propagate::{
    drive_hamiltonian, pair_hamiltonian, propagate_envelope, propagate_pair, propagate_piecewise, step_unitary,
    SpectatorFlip,
};
