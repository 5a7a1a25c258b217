//! Pulse synthesis, the published-table normalization and simulated calibrations.

mod calibrate;
pub mod nonsmooth;
mod normalization;
mod synth;

pub use calibrate::{
    calibrate_amplitude, calibrate_drag_weight, calibrate_gate, calibrate_gate_amplitude, calibrate_gate_drag,
    CalibrationOptions, CalibrationReport, CalibrationRound, DragCriterion,
};
pub use normalization::{resolve_table_normalization, TableNormalization, TABLE_COEFFICIENTS};
pub use synth::{
    fidelity_cost_gradient, finite_difference_gradient, optimize_pulse, CostRecord, OptimizeOptions, OptimizeResult,
};
