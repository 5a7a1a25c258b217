//! Randomized benchmarking and calibration sequences, simulated end to end.

pub mod clifford;
pub mod fit;
pub mod protocols;
pub mod rb;
pub mod sweep;

pub use clifford::{clifford_group, clifford_table, x90_index, CliffordGate, Primitive};
pub use fit::{epg_from_rb, error_per_clifford, fit_decay, fit_decay_weighted, DecayFit, Rate, RateKind};
pub use rb::{
    default_lengths, rb_sequence, rb_sequences, simulate_rb, spectator_lengths, spectator_rb, survival_histogram,
    write_histogram_csv, GateImplementation, RbConfig, RbMode, RbResult, RbSequence, SpectatorOptions,
};
pub use sweep::{detuning_sweep, sweep_table, write_sweep_csv, SweepPath, SweepPoint, SweepRow};
