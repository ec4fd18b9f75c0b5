//! Exact continuous-time simulation of the knowledge contact process and its
//! coupled variants on `Z^d`, built on the Harris graphical representation.
//!
//! The core is generic over the knowledge scalar (`f32` or `f64`); the
//! aliases at the bottom fix it to `f64`.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod observables;
pub mod rng;
pub mod scalar;
pub mod timeline;

pub use dynamics::{
    evolve, evolve_coupled, evolve_with, run_on_timeline, EvolveOptions, LatticeState, Params, Process,
    ProcessKind, Strategy, Trajectory,
};
pub use error::{Error, Result};
pub use lattice::{DomainMode, DomainSpec, Edge, FiniteLattice, Site};
pub use rng::RngStream;
pub use scalar::{Knowledge, DEFAULT_CLAMP_TOL};
pub use timeline::{augment_for_coupling, build_timeline, next_clock_time, Event, EventKind, Timeline};

pub type State = LatticeState<f64>;
pub type StateF32 = LatticeState<f32>;
pub type Params64 = Params<f64>;
pub type ParamsF32 = Params<f32>;
pub type Trajectory64 = Trajectory<f64>;
