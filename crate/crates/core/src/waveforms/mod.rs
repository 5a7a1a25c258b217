//! Pulse shapes on a uniform midpoint grid.

mod ansatz;
mod corpse;
mod drag;
mod envelope;
mod gaussian;

pub use ansatz::{ansatz_envelope, moment, partial_moment, AnsatzParams};
pub use corpse::{corpse_angles, corpse_envelope, flat_top_segment, CorpseSpec};
pub use drag::drag_augment;
pub use envelope::{grid_steps, Envelope, GRID_DT, MAX_GRID_STEPS};
pub use gaussian::{gaussian_envelope, gaussian_envelope_with, GaussianShape, DEFAULT_SIGMA_FRACTION};
