//! The four process variants and their evolution through the graphical
//! representation.
//!
//! * [`ProcessKind::Bounded`]: knowledge in `[0, 1]`, interactions move both
//!   sites to `v + μ·w·(1 − v)`.
//! * [`ProcessKind::Unbounded`]: the dominating linear process, `v + μ·w`.
//! * [`ProcessKind::Contact`]: the indicator process, `{0, 1}` values.
//! * [`ProcessKind::StarRestricted`]: the bounded rule on the star around one
//!   centre site; every mark not fully inside the star is discarded.

mod engine;
mod state;
mod update;

pub use engine::{
    evolve, evolve_coupled, evolve_with, run_on_timeline, run_pair_on_timeline, EvolveOptions,
    PairView, Process, Sample, Strategy, Trajectory,
};
pub use state::{LatticeState, Params, ProcessKind};
pub use update::{
    apply_death, apply_interaction, apply_interaction_unbounded, contact_update, snap_bounded,
    snap_unbounded, teach, teach_unbounded,
};
