//! Detuning-robust single-qubit gate synthesis with dynamically corrected gates,
//! plus the simulation tools to verify the resulting pulses.

pub mod benchmarking;
pub mod error;
pub mod gate;
pub mod linalg;
pub mod magnus;
pub mod model;
pub mod optimizer;
pub mod parallel;
pub mod quantum;
pub(crate) mod small;
pub mod waveforms;

pub use error::{DcgError, Result};
